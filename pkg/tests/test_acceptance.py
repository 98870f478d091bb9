"""The nine acceptance criteria at their stated tolerances and runtimes.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import math
import time

import mpmath
import numpy as np

from conftest import ACCEPTANCE_LINES
from fracfp.analysis import (
    DataCase,
    convergence_study,
    energy_check,
    gradient_sweep,
    identity_checks,
    lemma_property_suite,
    norm_decay_holds,
    poincare_study,
    psi,
    stability_sweep,
)
from fracfp.fem1d import CoefficientField, FeSpace, Mesh1D, norms
from fracfp.fracops import mittag_leffler
from fracfp.timestep import SchemeConfig, TimePartition, default_grading, dg_solve_diffusion, modal_reference

SIN = lambda x: np.sin(math.pi * x)
ZERO_G = lambda x, t: np.zeros(np.shape(x))
SOURCES = {
    "zero": ZERO_G,
    "sin": lambda x, t: np.sin(math.pi * x),
    "tsin": lambda x, t: t * np.sin(math.pi * x),
}


def record(k, passed, detail):
    line = f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    return passed


def space(M):
    return FeSpace(Mesh1D.uniform(0.0, 1.0, M))


def test_1_identities():
    t0 = time.perf_counter()
    checks = identity_checks(seed=0, trials=100)
    dt = time.perf_counter() - t0
    worst = {c.name: c.worst for c in checks}
    ok = all(c.passed for c in checks) and all(c.trials >= 100 for c in checks) and dt < 5
    assert record(1, ok, f"commutator {worst['commutator']:.1e}, semigroup {worst['semigroup']:.1e}, {dt:.1f}s")


def test_2_lemmas():
    t0 = time.perf_counter()
    rep = lemma_property_suite(seed=0, trials=100)
    dt = time.perf_counter() - t0
    detail = ", ".join(f"{c.name} {c.worst:+.1e}" for c in rep.checks)
    ok = rep.passed and all(c.tolerance <= 1e-9 and c.trials >= 100 for c in rep.checks) and dt < 30
    assert record(2, ok, f"worst relative slack: {detail}; {dt:.1f}s")


def test_3_mittag_leffler():
    t0 = time.perf_counter()
    z = np.linspace(-20.0, 5.0, 501)
    e1 = max(abs(mittag_leffler(1.0, v) - math.exp(v)) for v in z)
    x = np.linspace(0.0, 5.0, 501)
    mpmath.mp.dps = 30
    oracle = [float(mpmath.exp(mpmath.mpf(v) ** 2) * mpmath.erfc(mpmath.mpf(v))) for v in x]
    e2 = max(abs(mittag_leffler(0.5, -v) - o) for v, o in zip(x, oracle))
    dt = time.perf_counter() - t0
    ok = e1 <= 1e-10 and e2 <= 1e-8 and dt < 5
    assert record(3, ok, f"E_1 vs exp {e1:.1e}, E_1/2 vs exp(x^2)erfc(x) {e2:.1e}, {dt:.1f}s")


def test_4_backward_euler_oracle():
    M, N, T = 63, 64, 1.0
    V = space(M)
    cfg = SchemeConfig(1.0, TimePartition(T, N), V, CoefficientField(), SIN, degree=0)
    t0 = time.perf_counter()
    U = dg_solve_diffusion(cfg, ZERO_G)
    dt = time.perf_counter() - t0
    # independent dense backward Euler on the same P1 space
    h, k = 1.0 / (M + 1), T / N
    e = np.ones(M - 1)
    mass = h / 6 * (4 * np.eye(M) + np.diag(e, 1) + np.diag(e, -1))
    stiff = (2 * np.eye(M) - np.diag(e, 1) - np.diag(e, -1)) / h
    u = cfg.initial_vector()
    worst = 0.0
    for n in range(1, N + 1):
        u = np.linalg.solve(mass + k * stiff, mass @ u)
        worst = max(worst, float(np.max(np.abs(U.minus(n) - u))))
    ok = worst <= 1e-12 and dt < 1
    assert record(4, ok, f"max nodal difference {worst:.1e}, solve {dt:.2f}s")


def test_5_energy_inequality():
    t0 = time.perf_counter()
    V = space(31)
    bad = []
    worst = math.inf
    runs = 0
    for alpha in (0.25, 0.5, 0.75, 1.0):
        for gname, g in SOURCES.items():
            for N in (32, 64):
                for p in (0, 1):
                    part = TimePartition(1.0, N, default_grading(alpha))
                    cfg = SchemeConfig(alpha, part, V, CoefficientField(), SIN, degree=p)
                    led = energy_check(dg_solve_diffusion(cfg, g), cfg, g)
                    runs += 1
                    worst = min(worst, led.worst_slack / led.scale)
                    ok = led.worst_slack >= -1e-8 * led.scale
                    if gname == "zero":
                        ok = ok and norm_decay_holds(led, 1e-8)
                    if not ok:
                        bad.append((alpha, gname, N, p))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 120
    assert record(5, ok, f"{runs} runs, worst relative slack {worst:+.2e}, failures {bad}, {dt:.1f}s")


def test_6_modal_accuracy():
    t0 = time.perf_counter()
    T = 0.5
    summary = []
    ok = True
    for alpha in (0.5, 1.0):
        errs = []
        for M, N in ((31, 64), (63, 128), (127, 256), (255, 512)):
            V = space(M)
            cfg = SchemeConfig(alpha, TimePartition(T, N, 4.0), V, CoefficientField(), SIN)
            c = dg_solve_diffusion(cfg).value_at(T)
            exact = lambda x: modal_reference(x, alpha, 1.0, [(1, 1.0)], T)
            errs.append(norms(V, c, exact)["l2"])
        ok = ok and all(a > b for a, b in zip(errs, errs[1:])) and errs[-1] <= 1e-3
        summary.append(f"alpha={alpha}: " + " > ".join(f"{e:.1e}" for e in errs))
    dt = time.perf_counter() - t0
    ok = ok and dt < 120
    assert record(6, ok, "; ".join(summary) + f", {dt:.1f}s")


def test_7_rates():
    t0 = time.perf_counter()
    summary = []
    ok = True
    for alpha in (0.5, 0.75, 1.0):
        part = TimePartition(0.5, 256, default_grading(alpha))
        table = convergence_study(alpha, [15, 31, 63, 127], part, init="ritz")
        s = table.slopes
        ok = ok and table.passed
        summary.append(f"alpha={alpha}: L2 {s['l2']:.3f}, H1 {s['h1']:.3f}, shift {table.slope_shift:.3f}")
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    assert record(7, ok, "; ".join(summary) + f", {dt:.1f}s")


def test_8_alpha_uniform_stability():
    grid = [0.3, 0.5, 0.7, 0.9, 0.95, 0.99, 1.0]
    fields = CoefficientField(F=lambda x, t=0.0: np.ones(np.shape(x)))
    base = SchemeConfig(1.0, TimePartition(1.0, 256), space(127), fields, SIN, degree=0)
    cases = [DataCase("u0-sin", SIN), DataCase("g-tsin", None, SOURCES["tsin"])]
    t0 = time.perf_counter()
    reports = [stability_sweep(base, grid, cases), gradient_sweep(base, grid, cases)]
    dt = time.perf_counter() - t0
    parts, ok = [], True
    for rep in reports:
        ok = ok and not rep.failures()
        for case in rep.cases:
            r = rep.ratios(case)
            spread = rep.spread(case)
            near_one = r[0.99] <= 2 * r[0.5]
            ok = ok and spread <= 3.0 and near_one
            part = f"{rep.kind}/{case} spread {spread:.2f}"
            if spread > 3.0 or not near_one:
                part += " [" + " ".join(f"{a}:{v:.3f}" for a, v in sorted(r.items())) + "]"
                part += f" r(.99) <= 2 r(.5): {near_one}"
            parts.append(part)
    ok = ok and dt < 300
    assert record(8, ok, "; ".join(parts) + f", {dt:.1f}s")


def test_9_psi_and_poincare():
    t0 = time.perf_counter()
    small = 1e-3 * psi(1e-3)
    study = poincare_study([15, 31, 63, 127])
    dt = time.perf_counter() - t0
    rel = abs(small / (8 / math.pi**2) - 1)
    ok = (
        psi(1.0) == 1.0
        and rel <= 0.05
        and all(0 <= r["error"] for r in study["rows"])
        and abs(study["rate"] - 2.0) <= 0.1
        and dt < 10
    )
    assert record(9, ok, f"psi(1)={psi(1.0)}, a*psi(a) off 8/pi^2 by {rel:.1%}, Poincare rate {study['rate']:.3f}, {dt:.1f}s")
