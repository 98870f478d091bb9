"""Sweeps over the fractional exponent measuring stability ratios."""

from __future__ import annotations

import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..fem1d import FeSpace
from ..fracops import composite_gauss
from ..timestep import (
    DiscreteSolution,
    SchemeConfig,
    TimePartition,
    default_grading,
    dg_solve_diffusion,
    solve_general_F,
)


def _zero(x, t=0.0):
    return np.zeros(np.shape(x))


@dataclass(frozen=True)
class DataCase:
    """Initial datum and source for one sweep case; ``None`` means zero."""

    name: str
    u0: Callable | None = None
    g: Callable | None = None

    @property
    def initial(self) -> Callable:
        return self.u0 if self.u0 is not None else _zero

    @property
    def source(self) -> Callable:
        return self.g if self.g is not None else _zero


@dataclass
class StabilityRecord:
    alpha: float
    case: str
    value: float
    rhs: float
    ratio: float
    seconds: float = 0.0
    error: str | None = None

    @property
    def degenerate(self) -> bool:
        """Zero data: the ratio is the 0/0 sentinel (NaN)."""
        return self.error is None and self.rhs == 0.0


@dataclass
class StabilityReport:
    """Per-(alpha, case) records plus sweep metadata."""

    kind: str
    records: list[StabilityRecord]
    metadata: dict = field(default_factory=dict)

    def ratios(self, case: str) -> dict[float, float]:
        return {r.alpha: r.ratio for r in self.records if r.case == case and r.error is None}

    def spread(self, case: str) -> float:
        """``max / min`` of the finite ratios for one case."""
        vals = [v for v in self.ratios(case).values() if math.isfinite(v)]
        if not vals or min(vals) <= 0:
            return float("nan")
        return max(vals) / min(vals)

    @property
    def cases(self) -> list[str]:
        return sorted({r.case for r in self.records})

    def failures(self) -> list[StabilityRecord]:
        return [r for r in self.records if r.error is not None]

    def rows(self) -> list[dict]:
        return [
            {
                "alpha": r.alpha,
                "case": r.case,
                "value": r.value,
                "rhs": r.rhs,
                "ratio": r.ratio,
                "seconds": r.seconds,
                "error": r.error or "",
            }
            for r in self.records
        ]


def source_norm(space: FeSpace, g: Callable, s: float) -> float:
    """``||g(., s)||`` in L2, 5-point Gauss per element."""
    pts, wts = space.mesh.element_points(5)
    vals = np.asarray(g(pts, s), dtype=float)
    return math.sqrt(float((vals**2 * wts).sum()))


def rhs_functional(space: FeSpace, u0X: np.ndarray, g: Callable, t: float, breakpoints) -> float:
    """``||u0X|| + int_0^t ||g|| + (t^-1 int_0^t ||s g||^2)^(1/2)``.

    Time integrals use composite 4-point Gauss on the solver partition.
    """
    u0_norm = math.sqrt(max(space.mass.quad_form(u0X), 0.0))
    s, w = composite_gauss(breakpoints, t, 4)
    gn = np.array([source_norm(space, g, si) for si in s])
    return u0_norm + float(w @ gn) + math.sqrt(float(w @ (s * gn) ** 2) / t)


def _config_for(base: SchemeConfig, alpha: float, case: DataCase, grading: str | float) -> SchemeConfig:
    if grading == "auto":
        gamma = default_grading(alpha)
    elif grading == "base":
        gamma = base.partition.gamma
    else:
        gamma = float(grading)
    part = TimePartition(base.partition.T, base.partition.N, gamma)
    return replace(base, alpha=alpha, partition=part, u0=case.initial, u0_prime=None, init="l2" if base.init == "ritz" else base.init)


def solve(cfg: SchemeConfig, g: Callable) -> DiscreteSolution:
    """DG time stepping when the forcing vector vanishes, otherwise the general scheme."""
    if cfg.fields.F_is_zero:
        return dg_solve_diffusion(cfg, g)
    return solve_general_F(replace(cfg, degree=0), g)


def _run_sweep(kind, base, alpha_grid, cases, measure, grading, jobs) -> StabilityReport:
    alphas = [float(a) for a in alpha_grid]
    if not alphas:
        raise ValueError("alpha grid is empty")
    for a in alphas:
        if not 0.0 < a <= 1.0:
            raise ValueError(f"alpha {a} outside (0, 1]")
    if not cases:
        raise ValueError("need at least one data case")

    def task(item):
        alpha, case = item
        t0 = time.perf_counter()
        try:
            cfg = _config_for(base, alpha, case, grading)
            U = solve(cfg, case.source)
            value, rhs = measure(cfg, U, case)
            ratio = value / rhs if rhs > 0 else float("nan")
            return StabilityRecord(alpha, case.name, value, rhs, ratio, time.perf_counter() - t0)
        except Exception as exc:  # reported per case, sweep continues
            nan = float("nan")
            return StabilityRecord(alpha, case.name, nan, nan, nan, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")

    items = [(a, c) for c in cases for a in alphas]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(task, items))
    else:
        records = [task(it) for it in items]
    records.sort(key=lambda r: (r.case, r.alpha))
    meta = {
        "M": base.space.dof,
        "domain": [base.space.mesh.x_left, base.space.mesh.x_right],
        "T": base.partition.T,
        "N": base.partition.N,
        "grading": grading,
        "degree": base.degree,
    }
    return StabilityReport(kind, records, meta)


def stability_sweep(
    base: SchemeConfig,
    alpha_grid: Sequence[float],
    cases: Sequence[DataCase],
    *,
    grading: str | float = "auto",
    jobs: int = 1,
) -> StabilityReport:
    """``max_t ||u_h(t)||`` over the right-hand side functional at ``t = T``.

    ``grading`` is ``"auto"`` (``min(2/alpha, 4)``), ``"base"`` (keep the
    base partition's exponent) or an explicit exponent.
    """

    def measure(cfg, U, case):
        rhs = rhs_functional(cfg.space, U.initial, case.source, cfg.partition.T, cfg.partition.breakpoints)
        return U.max_norm(), rhs

    return _run_sweep("stability", base, alpha_grid, cases, measure, grading, jobs)


def gradient_sweep(
    base: SchemeConfig,
    alpha_grid: Sequence[float],
    cases: Sequence[DataCase],
    *,
    t_eval: float | None = None,
    grading: str | float = "auto",
    jobs: int = 1,
) -> StabilityReport:
    """``t*^(alpha/2) ||grad u_h(t*)||`` over the functional at ``t*`` (default ``T/2``)."""
    t_star = 0.5 * base.partition.T if t_eval is None else float(t_eval)
    if not 0.0 < t_star <= base.partition.T:
        raise ValueError("evaluation time must lie in (0, T]")

    def measure(cfg, U, case):
        c = U.value_at(t_star)
        grad = math.sqrt(max(cfg.space.laplacian.quad_form(c), 0.0))
        rhs = rhs_functional(cfg.space, U.initial, case.source, t_star, cfg.partition.breakpoints)
        return t_star ** (0.5 * cfg.alpha) * grad, rhs

    report = _run_sweep("gradient", base, alpha_grid, cases, measure, grading, jobs)
    report.metadata["t_eval"] = t_star
    return report
