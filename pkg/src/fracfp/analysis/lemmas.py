"""Randomised checks of fractional-integral inequalities and identities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from ..fracops import (
    PiecewiseTrajectory,
    frac_integral_eval,
    graded_gauss,
    history_inner_integral,
)
from ..fracops.kernel import _omega0

SLACK_TOL = 1e-9
IDENTITY_TOL = 1e-10


def random_trajectory(
    rng: np.random.Generator,
    *,
    max_intervals: int = 5,
    max_degree: int = 2,
    max_dim: int = 3,
    T: float | None = None,
    continuous: bool = False,
    zero_start: bool = False,
) -> PiecewiseTrajectory:
    """Random piecewise polynomial on a random partition of ``[0, T]``."""
    T = float(rng.uniform(0.2, 3.0)) if T is None else T
    n = int(rng.integers(1, max_intervals + 1))
    inner = np.sort(rng.uniform(0.0, T, n - 1))
    bp = np.concatenate(([0.0], inner, [T]))
    while np.any(np.diff(bp) < 1e-3 * T):
        inner = np.sort(rng.uniform(0.0, T, n - 1))
        bp = np.concatenate(([0.0], inner, [T]))
    # a continuous path starting at zero needs a nonconstant piece
    deg = int(rng.integers(1 if zero_start else 0, max_degree + 1))
    dim = int(rng.integers(1, max_dim + 1))
    coeffs = rng.standard_normal((n, deg + 1, dim))
    if continuous:
        signs = (-1.0) ** np.arange(1, deg + 1)
        prev_end = np.zeros(dim) if zero_start else None
        for j in range(n):
            if prev_end is not None:
                # start value sum_i c_i (-1)**i must equal the previous end value
                coeffs[j, 0] = prev_end - (signs[:, None] * coeffs[j, 1:]).sum(axis=0)
            prev_end = coeffs[j].sum(axis=0)
    return PiecewiseTrajectory(bp, coeffs, np.full(n, deg))


def _rule(bp, t):
    return graded_gauss(bp, t)


def _sq_integral(phi: PiecewiseTrajectory, mu: float, t: float) -> float:
    """``int_0^t ||I^mu phi||^2``."""
    s, w = _rule(phi.breakpoints, t)
    v = frac_integral_eval(phi, mu, s)
    return float(w @ np.einsum("qm,qm->q", v, v))


def _scale(*vals: float) -> float:
    return max(1e-300, *(abs(v) for v in vals))


@dataclass
class CheckResult:
    """Worst relative slack (or residual) of one check over all trials."""

    name: str
    trials: int
    worst: float
    tolerance: float
    kind: str = "slack"
    samples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if self.kind == "slack":
            return self.worst >= -self.tolerance
        return self.worst <= self.tolerance


@dataclass
class LemmaReport:
    seed: int
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def rows(self) -> list[dict]:
        return [
            {"check": c.name, "kind": c.kind, "trials": c.trials, "worst": c.worst, "tolerance": c.tolerance, "passed": c.passed}
            for c in self.checks
        ]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def check_nu_mu(phi: PiecewiseTrajectory, mu: float, nu: float, t: float) -> tuple[float, float]:
    """``int ||I^nu phi||^2 <= 2 t^(2(nu-mu)) int ||I^mu phi||^2``; returns (slack, scale)."""
    lhs = _sq_integral(phi, nu, t)
    rhs = 2.0 * t ** (2.0 * (nu - mu)) * _sq_integral(phi, mu, t)
    return rhs - lhs, _scale(lhs, rhs)


def check_mu_y(phi: PiecewiseTrajectory, mu: float, t: float) -> tuple[float, float]:
    """``int ||I^mu phi||^2 <= 2 int omega_mu(t-s) int_0^s <phi, I^mu phi> dq ds``.

    The double integral equals ``2 int omega_(mu+1)(t-q) <phi, I^mu phi>(q) dq``.
    """
    lhs = _sq_integral(phi, mu, t)
    s, w = _rule(phi.breakpoints, t)
    inner = np.einsum("qm,qm->q", phi(s), frac_integral_eval(phi, mu, s))
    rhs = 2.0 * float(w @ (_omega0(mu + 1.0, t - s) * inner))
    return rhs - lhs, _scale(lhs, rhs)


def check_phi_t(phi: PiecewiseTrajectory, nu: float, t: float) -> tuple[float, float]:
    """``||phi(t)||^2 <= 2 omega_(2-nu)(t) int <phi', I^nu phi'>`` for continuous ``phi``, ``phi(0) = 0``."""
    val = phi(t)
    lhs = float(val @ val)
    dphi = phi.derivative()
    rhs = 2.0 * float(_omega0(2.0 - nu, np.array([t]))[0]) * history_inner_integral(dphi, nu, t, rule=_rule)
    return rhs - lhs, _scale(lhs, rhs)


def check_positive(phi: PiecewiseTrajectory, mu: float, t: float) -> tuple[float, float]:
    """``int <phi, I^mu phi> >= 0``; the scale is ``int ||phi||^2``."""
    val = history_inner_integral(phi, mu, t, rule=_rule)
    s, w = _rule(phi.breakpoints, t)
    v = phi(s)
    return val, _scale(float(w @ np.einsum("qm,qm->q", v, v)), abs(val))


def check_g_alternative(g: PiecewiseTrajectory, eta: float, t: float) -> tuple[float, float]:
    """``(int ||g||)^2 + t^-1 int ||s g||^2 <= (1 + 1/eta) t^eta int s^(1-eta) ||g||^2``."""
    s, w = _rule(g.breakpoints, t)
    v = g(s)
    gn = np.sqrt(np.einsum("qm,qm->q", v, v))
    lhs = float(w @ gn) ** 2 + float(w @ (s * gn) ** 2) / t
    rhs = (1.0 + 1.0 / eta) * t**eta * float(w @ (s ** (1.0 - eta) * gn**2))
    return rhs - lhs, _scale(lhs, rhs)


def commutator_residual(phi: PiecewiseTrajectory, alpha: float, t) -> float:
    """Relative residual of ``M I^alpha - I^alpha M = alpha I^(alpha+1)`` at times ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = t[:, None] * frac_integral_eval(phi, alpha, t)
    b = frac_integral_eval(phi.times_t(), alpha, t)
    c = alpha * frac_integral_eval(phi, alpha + 1.0, t)
    scale = max(1e-300, float(np.max(np.abs(np.concatenate([a, b, c], axis=None)))))
    return float(np.max(np.abs(a - b - c))) / scale


def semigroup_residual(phi: PiecewiseTrajectory, mu: float, nu: float, t: float, npts: int = 8) -> float:
    """Relative residual of ``I^mu I^nu phi = I^(mu+nu) phi`` for a one-interval ``phi``.

    On a single interval starting at 0, ``I^nu phi(s) = s^nu p(s)`` with ``p``
    polynomial, so the outer integral is exact under Gauss-Jacobi weights
    ``(1-x)^(mu-1) (1+x)^nu``.
    """
    if phi.n_intervals != 1:
        raise ValueError("semigroup check needs a single-interval trajectory")
    x, w = roots_jacobi(npts, mu - 1.0, nu)
    s = 0.5 * t * (1.0 + x)
    p = frac_integral_eval(phi, nu, s) / s[:, None] ** nu
    lhs = (0.5 * t) ** (mu + nu) / math.gamma(mu) * (w @ p)
    rhs = frac_integral_eval(phi, mu + nu, t)
    scale = max(1e-300, float(np.max(np.abs(rhs))), float(np.max(np.abs(lhs))))
    return float(np.max(np.abs(lhs - rhs))) / scale


def identity_checks(seed: int = 0, trials: int = 100) -> list[CheckResult]:
    """Commutator and semigroup identities over random degree-<=2 trajectories."""
    rng = np.random.default_rng(seed)
    worst_c = worst_s = 0.0
    for _ in range(trials):
        phi = random_trajectory(rng)
        alpha = float(rng.uniform(0.05, 1.0))
        t = rng.uniform(0.0, phi.final_time, 4)
        t = np.append(t, phi.breakpoints[1:])
        worst_c = max(worst_c, commutator_residual(phi, alpha, t))
        one = random_trajectory(rng, max_intervals=1)
        mu, nu = rng.uniform(0.05, 1.0, 2)
        worst_s = max(worst_s, semigroup_residual(one, float(mu), float(nu), float(rng.uniform(0.05, 1.0)) * one.final_time))
    return [
        CheckResult("commutator", trials, worst_c, IDENTITY_TOL, "residual"),
        CheckResult("semigroup", trials, worst_s, IDENTITY_TOL, "residual"),
    ]


def lemma_property_suite(seed: int = 0, trials: int = 100) -> LemmaReport:
    """Worst relative slack of every inequality over ``trials`` random draws.

    The first two draws of each inequality are fixed extremal cases where it
    is an equality or nearly so (constant or linear data at order 1).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = {k: math.inf for k in ("nu_mu", "mu_y", "phi_t", "positive", "g_alternative")}

    def record(name, slack_scale):
        slack, scale = slack_scale
        worst[name] = min(worst[name], slack / scale)

    one = np.array([0.0, 1.0])
    const = PiecewiseTrajectory.constant(1.0, one)
    linear = PiecewiseTrajectory.from_function(lambda s: s, one, 1)
    for i in range(trials):
        if i == 0:
            record("nu_mu", check_nu_mu(const, 1.0, 1.0, 1.0))
            record("mu_y", check_mu_y(const, 1.0, 1.0))
            record("phi_t", check_phi_t(linear, 1.0, 1.0))
            record("positive", check_positive(const, 0.5, 1.0))
            record("g_alternative", check_g_alternative(const, 1.0, 1.0))
            continue
        phi = random_trajectory(rng)
        t = float(rng.uniform(0.05, 1.0)) * phi.final_time
        mu = float(rng.uniform(0.0, 1.0))
        nu = float(rng.uniform(mu, 1.0))
        if i % 10 == 1:
            mu = 0.0
        record("nu_mu", check_nu_mu(phi, mu, nu, t))
        record("mu_y", check_mu_y(phi, float(rng.uniform(0.02, 1.0)), t))
        record("positive", check_positive(phi, float(rng.uniform(0.02, 0.98)), t))
        record("g_alternative", check_g_alternative(phi, float(rng.uniform(0.02, 1.0)), t))
        cont = random_trajectory(rng, continuous=True, zero_start=True, max_degree=2)
        tc = float(rng.uniform(0.05, 1.0)) * cont.final_time
        record("phi_t", check_phi_t(cont, float(rng.uniform(0.02, 1.0)), tc))
    checks = [CheckResult(name, trials, val, SLACK_TOL) for name, val in worst.items()]
    return LemmaReport(seed, checks)
