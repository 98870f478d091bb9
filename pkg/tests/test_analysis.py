import math

import mpmath
import numpy as np
import pytest

from fracfp.analysis import (
    DataCase,
    RateTable,
    b_operator_ratio_probe,
    convergence_study,
    energy_check,
    fit_slope,
    gradient_sweep,
    identity_checks,
    lemma_property_suite,
    norm_decay_holds,
    poincare_study,
    psi,
    rhs_functional,
    stability_sweep,
)
from fracfp.analysis.lemmas import (
    check_g_alternative,
    check_mu_y,
    check_nu_mu,
    check_phi_t,
    check_positive,
    commutator_residual,
    random_trajectory,
    semigroup_residual,
)
from fracfp.fem1d import CoefficientField, FeSpace, Mesh1D
from fracfp.fracops import PiecewiseTrajectory, frac_integral_eval
from fracfp.timestep import SchemeConfig, TimePartition, dg_solve_diffusion

SIN = lambda x: np.sin(math.pi * x)
G_SIN = lambda x, t: np.sin(math.pi * x)
ZERO_U = lambda x: np.zeros_like(x)


def base_cfg(M=15, N=16, T=1.0, fields=None, degree=1, alpha=0.5, gamma=1.0, u0=SIN):
    space = FeSpace(Mesh1D.uniform(0.0, 1.0, M))
    return SchemeConfig(alpha, TimePartition(T, N, gamma), space, fields or CoefficientField(), u0, degree)


# constants


def test_psi_values():
    assert psi(1.0) == 1.0
    mpmath.mp.dps = 30
    a = mpmath.mpf("0.5")
    ref = mpmath.pi ** (-(1 - a)) * (2 - a) ** (2 - a) * (1 - a) ** (-(1 - a)) / mpmath.sin(mpmath.pi * a / 2)
    assert psi(0.5) == pytest.approx(float(ref), rel=1e-14)
    assert psi(0.5) == pytest.approx(2.0730, abs=1e-3)
    assert 0.001 * psi(0.001) == pytest.approx(8 / math.pi**2, rel=0.05)
    assert psi(1 - 1e-9) == pytest.approx(1.0, abs=1e-6)
    for bad in (0.0, 1.2, -0.3):
        with pytest.raises(ValueError):
            psi(bad)


def test_fit_slope():
    h = np.array([0.1, 0.05, 0.025])
    assert fit_slope(h, 3 * h**2) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_slope([0.1], [1.0])
    with pytest.raises(ValueError):
        fit_slope([0.1, 0.05], [1.0, 0.0])


def test_poincare_study_rate():
    out = poincare_study([7, 15, 31, 63])
    assert out["exact"] == pytest.approx(1 / math.pi**2)
    assert all(r["error"] >= 0 for r in out["rows"])
    assert out["rate"] == pytest.approx(2.0, abs=0.1)


# stability sweeps


def test_zero_data_sentinel():
    rep = stability_sweep(base_cfg(), [0.5, 1.0], [DataCase("zero")])
    for r in rep.records:
        assert r.value == 0.0 and r.rhs == 0.0
        assert math.isnan(r.ratio) and r.degenerate
    grad = gradient_sweep(base_cfg(), [0.5], [DataCase("zero")])
    assert grad.records[0].value == 0.0


def test_homogeneous_diffusion_contracts_for_every_alpha():
    grid = [0.1, 0.3, 0.7, 0.95, 1.0]
    rep = stability_sweep(base_cfg(), grid, [DataCase("sin", SIN)])
    for r in rep.records:
        # the functional is ||u0X|| here
        assert r.value <= r.rhs * (1 + 1e-8)
    assert sorted(rep.ratios("sin")) == grid


def test_sweep_records_are_deterministic_and_ordered():
    cases = [DataCase("b", SIN, G_SIN), DataCase("a", None, G_SIN)]
    fields = CoefficientField(F=lambda x, t=0.0: np.ones_like(x))
    one = stability_sweep(base_cfg(fields=fields), [0.7, 0.3], cases)
    two = stability_sweep(base_cfg(fields=fields), [0.7, 0.3], cases, jobs=2)
    key = lambda rep: [(r.case, r.alpha, r.value, r.rhs) for r in rep.records]
    assert key(one) == key(two)
    assert [(r.case, r.alpha) for r in one.records] == [("a", 0.3), ("a", 0.7), ("b", 0.3), ("b", 0.7)]
    assert one.cases == ["a", "b"]


def test_sweep_input_errors():
    with pytest.raises(ValueError):
        stability_sweep(base_cfg(), [], [DataCase("sin", SIN)])
    with pytest.raises(ValueError):
        stability_sweep(base_cfg(), [0.0], [DataCase("sin", SIN)])
    with pytest.raises(ValueError):
        gradient_sweep(base_cfg(), [0.5], [DataCase("sin", SIN)], t_eval=2.0)


def test_sweep_reports_solver_failures_per_case():
    def broken(x, t):
        raise RuntimeError("bad source")

    rep = stability_sweep(base_cfg(), [0.5], [DataCase("ok", SIN), DataCase("broken", SIN, broken)])
    assert [r.case for r in rep.failures()] == ["broken"]
    assert "bad source" in rep.failures()[0].error
    assert rep.ratios("ok")[0.5] > 0


def test_rhs_functional_closed_form():
    cfg = base_cfg(M=31, N=8)
    u0X = cfg.initial_vector()
    # g = sin(pi x): ||g|| = 1/sqrt(2) for all t
    val = rhs_functional(cfg.space, u0X, G_SIN, 1.0, cfg.partition.breakpoints)
    u0_norm = math.sqrt(cfg.space.mass.quad_form(u0X))
    expected = u0_norm + 1 / math.sqrt(2) + math.sqrt(1 / 6)
    assert val == pytest.approx(expected, rel=1e-4)


def test_spread():
    rep = stability_sweep(base_cfg(), [0.5, 1.0], [DataCase("sin", SIN)])
    r = rep.ratios("sin")
    assert rep.spread("sin") == pytest.approx(max(r.values()) / min(r.values()))
    assert math.isnan(stability_sweep(base_cfg(), [0.5], [DataCase("zero")]).spread("zero"))


# energy


def test_energy_ledger_zero_data():
    cfg = base_cfg(u0=ZERO_U)
    led = energy_check(dg_solve_diffusion(cfg), cfg)
    assert np.all(led.lhs == 0.0) and np.all(led.slack == 0.0)
    assert led.passed


@pytest.mark.parametrize("degree", [0, 1])
def test_energy_ledger_without_source(degree):
    cfg = base_cfg(degree=degree, N=32, gamma=2.0, alpha=0.4)
    led = energy_check(dg_solve_diffusion(cfg), cfg)
    np.testing.assert_allclose(led.rhs, led.initial_sq)
    assert led.passed and norm_decay_holds(led)
    assert np.all(np.diff(led.memory) >= -1e-12)


def test_energy_ledger_with_source():
    fields = CoefficientField(g=G_SIN)
    cfg = base_cfg(N=64, fields=fields)
    led = energy_check(dg_solve_diffusion(cfg), cfg)
    assert led.worst_slack >= 0.0
    assert led.memory_discrepancy <= 1e-9 * led.scale
    assert len(led.rows()) == 64


def test_energy_memory_for_piecewise_constants():
    # for DG(0) the memory up to t_n is sum_j <A U_j, I^alpha U(t_j) - I^alpha U(t_(j-1))>
    cfg = base_cfg(degree=0, N=6, gamma=2.0, M=5)
    U = dg_solve_diffusion(cfg, G_SIN)
    led = energy_check(U, cfg, G_SIN)
    Ia = frac_integral_eval(U.trajectory, cfg.alpha, U.breakpoints)
    ref = 0.0
    for n in range(1, U.N + 1):
        c = U.trajectory.coeffs[n - 1, 0]
        ref += float(c @ (cfg.stiffness @ (Ia[n] - Ia[n - 1])))
        assert led.memory[n - 1] == pytest.approx(ref, rel=1e-10)


# rates


def test_rate_table_single_row_has_no_slope():
    table = RateTable(0.5, 1.0, [0.1], [1e-3], [1e-2])
    assert table.slopes is None and table.slope_shift is None
    assert not table.passed


def test_rate_table_flags_temporal_shift():
    h = [0.1, 0.05, 0.025]
    l2 = [x**2 for x in h]
    h1 = list(h)
    ok = RateTable(0.5, 1.0, h, l2, h1, l2, h1)
    assert ok.passed and not ok.temporal_flag
    coarse = [1e-3 + v for v in l2]
    bad = RateTable(0.5, 1.0, h, l2, h1, coarse, h1)
    assert bad.temporal_flag and not bad.passed
    with pytest.raises(ValueError):
        RateTable(0.5, 1.0, [0.1, 0.2], [1, 1], [1, 1])


def test_convergence_study_small():
    table = convergence_study(1.0, [7, 15, 31], TimePartition(0.5, 128, 2.0))
    s = table.slopes
    assert s["l2"] == pytest.approx(2.0, abs=0.2)
    assert s["h1"] == pytest.approx(1.0, abs=0.2)
    assert len(table.rows()) == 3


# lemma suite


def test_zero_trajectory_gives_equality():
    zero = PiecewiseTrajectory.constant(0.0, [0.0, 0.5, 1.0])
    for slack, _ in (
        check_nu_mu(zero, 0.3, 0.6, 1.0),
        check_mu_y(zero, 0.4, 1.0),
        check_phi_t(zero, 0.5, 1.0),
        check_positive(zero, 0.5, 1.0),
        check_g_alternative(zero, 0.5, 1.0),
    ):
        assert slack == 0.0


def test_extremal_cases_are_tight():
    one = PiecewiseTrajectory.constant(1.0, [0.0, 1.0])
    lin = PiecewiseTrajectory.from_function(lambda s: s[..., None], [0.0, 1.0], 1)
    # order-1 constant data: int (s)^2 = 1/3 against 2 * int s^2/2 = 1/3
    slack, scale = check_mu_y(one, 1.0, 1.0)
    assert abs(slack) <= 1e-14 * scale
    # phi = s at order 1: ||phi(1)||^2 = 1 = 2 * omega_1(1) * int s ds
    slack, scale = check_phi_t(lin, 1.0, 1.0)
    assert abs(slack) <= 1e-14 * scale


def test_lemma_suite_passes_and_is_reproducible():
    a = lemma_property_suite(seed=3, trials=30)
    b = lemma_property_suite(seed=3, trials=30)
    assert a.passed
    assert a.rows() == b.rows()
    assert a["positive"].worst >= -1e-9
    with pytest.raises(KeyError):
        a["missing"]
    with pytest.raises(ValueError):
        lemma_property_suite(trials=0)


def test_identity_residuals():
    checks = identity_checks(seed=1, trials=30)
    assert all(c.passed for c in checks)
    rng = np.random.default_rng(0)
    phi = random_trajectory(rng, max_intervals=1)
    assert semigroup_residual(phi, 0.4, 0.7, 0.8 * phi.final_time) < 1e-12
    assert commutator_residual(phi, 0.5, [0.3 * phi.final_time]) < 1e-12
    with pytest.raises(ValueError):
        semigroup_residual(PiecewiseTrajectory.constant(1.0, [0.0, 0.5, 1.0]), 0.4, 0.5, 1.0)


# forcing operator probe


FAMILY = [
    lambda t: np.ones(np.shape(t) + (1,)),
    lambda t: np.sin(3 * t)[..., None],
    lambda t: (t**2)[..., None],
]


def test_probe_zero_forcing():
    rep = b_operator_ratio_probe(FAMILY, 0.5, lambda t: 0.0, levels=(1, 2))
    assert rep.ratios == [0.0, 0.0]


def test_probe_constant_forcing_is_exact():
    # B1 = F I^alpha for constant F
    rep = b_operator_ratio_probe(FAMILY, 0.5, lambda t: 2.0, lambda t: 0.0, levels=(1, 2, 3))
    np.testing.assert_allclose(rep.ratios, 4.0, rtol=1e-12)
    assert rep.bounded


@pytest.mark.parametrize("alpha", [0.3, 0.9])
def test_probe_bounded_for_time_dependent_forcing(alpha):
    rep = b_operator_ratio_probe(FAMILY, alpha, lambda t: 1.0 + t, lambda t: 1.0, levels=(1, 2, 3, 4))
    assert rep.bounded
    assert 0 < rep.max_ratio < 10
    assert [r["level"] for r in rep.rows()] == [1, 2, 3, 4]
