"""Coercivity constant of the memory term and Poincare constants."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from ..fem1d import FeSpace, Mesh1D, discrete_poincare_constant, poincare_constant


def psi(alpha: float) -> float:
    """``pi**-(1-a) (2-a)**(2-a) (1-a)**-(1-a) / sin(pi a / 2)``, with ``psi(1) = 1``."""
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        return 1.0
    b = 1.0 - alpha
    log_val = -b * math.log(math.pi) + (2.0 - alpha) * math.log(2.0 - alpha) - b * math.log(b)
    return math.exp(log_val) / math.sin(0.5 * math.pi * alpha)


def fit_slope(h: Sequence[float], err: Sequence[float]) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if h.size < 2:
        raise ValueError("slope fit needs at least two rows")
    if np.any(h <= 0) or np.any(err <= 0):
        raise ValueError("slope fit needs positive data")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def poincare_study(meshes: Sequence[int], domain: tuple[float, float] = (0.0, 1.0)) -> dict:
    """Discrete Poincare constants on uniform meshes and their convergence rate.

    Each discrete constant is ``1 / lambda_min`` of the Dirichlet Laplacian
    on the finite element space; it never exceeds the continuous constant.
    """
    exact = poincare_constant(*domain)
    rows = []
    for M in meshes:
        space = FeSpace(Mesh1D.uniform(domain[0], domain[1], M))
        c = discrete_poincare_constant(space)
        rows.append({"M": M, "h": space.mesh.h, "constant": c, "error": exact - c})
    out = {"exact": exact, "rows": rows}
    if len(rows) >= 2:
        out["rate"] = fit_slope([r["h"] for r in rows], [abs(r["error"]) for r in rows])
    return out
