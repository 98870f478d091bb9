"""Spatial convergence rates against the modal reference solution."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..fem1d import CoefficientField, FeSpace, Mesh1D, norms
from ..timestep import SchemeConfig, TimePartition, dg_solve_diffusion, modal_reference
from .constants import fit_slope

L2_BAND = (1.8, 2.2)
H1_BAND = (0.8, 1.2)
SHIFT_TOL = 0.1


@dataclass
class RateTable:
    """Errors at ``t_eval`` on a mesh family, with fitted log-log slopes.

    ``coarse_slopes`` repeats the fit with half as many time steps; a shift
    of ``SHIFT_TOL`` or more flags temporal error contaminating the rates.
    """

    alpha: float
    t_eval: float
    h: list[float]
    l2: list[float]
    h1: list[float]
    coarse_l2: list[float] = field(default_factory=list)
    coarse_h1: list[float] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if any(b >= a for a, b in zip(self.h, self.h[1:])):
            raise ValueError("mesh sizes must be strictly decreasing")

    @property
    def slopes(self) -> dict[str, float] | None:
        if len(self.h) < 2:
            return None
        return {"l2": fit_slope(self.h, self.l2), "h1": fit_slope(self.h, self.h1)}

    @property
    def coarse_slopes(self) -> dict[str, float] | None:
        if len(self.h) < 2 or not self.coarse_l2:
            return None
        return {"l2": fit_slope(self.h, self.coarse_l2), "h1": fit_slope(self.h, self.coarse_h1)}

    @property
    def slope_shift(self) -> float | None:
        s, c = self.slopes, self.coarse_slopes
        if s is None or c is None:
            return None
        return max(abs(s["l2"] - c["l2"]), abs(s["h1"] - c["h1"]))

    @property
    def temporal_flag(self) -> bool:
        shift = self.slope_shift
        return shift is not None and shift >= SHIFT_TOL

    @property
    def passed(self) -> bool:
        s = self.slopes
        if s is None:
            return False
        return (
            L2_BAND[0] <= s["l2"] <= L2_BAND[1]
            and H1_BAND[0] <= s["h1"] <= H1_BAND[1]
            and not self.temporal_flag
        )

    def rows(self) -> list[dict]:
        out = []
        for i, h in enumerate(self.h):
            row = {"alpha": self.alpha, "h": h, "error_l2": self.l2[i], "error_h1": self.h1[i]}
            if self.coarse_l2:
                row["coarse_error_l2"] = self.coarse_l2[i]
                row["coarse_error_h1"] = self.coarse_h1[i]
            out.append(row)
        return out


def modal_errors(
    cfg: SchemeConfig, t_eval: float, modes: Sequence[tuple[int, float]], kappa: float
) -> dict[str, float]:
    """L2 and H1-seminorm errors of the DG solution against the modal reference."""
    U = dg_solve_diffusion(cfg)
    c = U.value_at(t_eval)
    dom = (cfg.space.mesh.x_left, cfg.space.mesh.x_right)
    return norms(
        cfg.space,
        c,
        lambda x: modal_reference(x, cfg.alpha, kappa, modes, t_eval, dom),
        lambda x: modal_reference(x, cfg.alpha, kappa, modes, t_eval, dom, derivative=True),
    )


def sine_data(modes: Sequence[tuple[int, float]], domain: tuple[float, float]):
    """Initial datum ``sum a_m sin(m pi (x - x_L) / L)`` and its derivative."""
    xl, xr = domain
    L = xr - xl

    def u0(x):
        return sum(a * np.sin(m * math.pi * (x - xl) / L) for m, a in modes)

    def du0(x):
        return sum(a * (m * math.pi / L) * np.cos(m * math.pi * (x - xl) / L) for m, a in modes)

    return u0, du0


def convergence_study(
    alpha: float,
    meshes: Sequence[int],
    partition: TimePartition,
    *,
    t_eval: float | None = None,
    kappa: float = 1.0,
    modes: Sequence[tuple[int, float]] = ((1, 1.0),),
    domain: tuple[float, float] = (0.0, 1.0),
    init: str = "ritz",
    degree: int = 1,
    check_temporal: bool = True,
) -> RateTable:
    """Errors at ``t_eval`` (default ``T``) over uniform meshes with ``M`` interior nodes.

    With ``check_temporal`` the study is repeated with ``N / 2`` steps.
    """
    t_eval = partition.T if t_eval is None else float(t_eval)
    if not 0.0 < t_eval <= partition.T:
        raise ValueError("evaluation time must lie in (0, T]")
    if not meshes:
        raise ValueError("need at least one mesh")
    fields = CoefficientField(kappa=lambda x: np.full(np.shape(x), kappa), domain=domain, final_time=partition.T)
    u0, du0 = sine_data(modes, domain)
    coarse = TimePartition(partition.T, max(1, partition.N // 2), partition.gamma)
    hs, l2, h1, cl2, ch1 = [], [], [], [], []
    for M in meshes:
        space = FeSpace(Mesh1D.uniform(domain[0], domain[1], M))
        cfg = SchemeConfig(alpha, partition, space, fields, u0, degree=degree, init=init, u0_prime=du0)
        e = modal_errors(cfg, t_eval, modes, kappa)
        hs.append(space.mesh.h)
        l2.append(e["l2"])
        h1.append(e["h1_semi"])
        if check_temporal:
            ec = modal_errors(SchemeConfig(alpha, coarse, space, fields, u0, degree=degree, init=init, u0_prime=du0), t_eval, modes, kappa)
            cl2.append(ec["l2"])
            ch1.append(ec["h1_semi"])
    meta = {"T": partition.T, "N": partition.N, "gamma": partition.gamma, "degree": degree, "init": init}
    return RateTable(alpha, t_eval, hs, l2, h1, cl2, ch1, meta)
