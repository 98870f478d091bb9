"""Boundedness probe for the forcing operator ``B1``."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from ..fracops import PiecewiseTrajectory, frac_integral_eval, gauss_legendre, graded_gauss

GROWTH_TOL = 1.1


@dataclass
class ProbeReport:
    """``int ||B1 phi||^2 / int ||I^alpha phi||^2`` per refinement level."""

    alpha: float
    levels: list[int]
    ratios: list[float]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    @property
    def bounded(self) -> bool:
        """Ratio at level ``k+1`` within ``GROWTH_TOL`` times level ``k`` for ``k >= 2``."""
        return all(
            self.ratios[i + 1] <= GROWTH_TOL * self.ratios[i]
            for i in range(len(self.ratios) - 1)
            if self.levels[i] >= 2
        )

    def rows(self) -> list[dict]:
        return [{"alpha": self.alpha, "level": k, "ratio": r} for k, r in zip(self.levels, self.ratios)]


def _outer_rule(bp: np.ndarray, T: float) -> tuple[np.ndarray, np.ndarray]:
    return graded_gauss(bp, T, npts=6, levels=6, ratio=0.25)


def _sample(fun: Callable, s: np.ndarray, dim: int) -> np.ndarray:
    return np.array([np.broadcast_to(np.asarray(fun(si), dtype=float), (dim,)) for si in s])


def b1_values(phi: PiecewiseTrajectory, F: Callable, alpha: float, s, dF: Callable | None = None) -> np.ndarray:
    """``B1 phi`` at many times at once.

    Same formula as ``operator_B1``; the integral of ``F' I^alpha phi`` is
    accumulated over the gaps between consecutive sorted times, split at the
    breakpoints and graded towards them, with 8-point Gauss per piece.
    """
    s = np.asarray(s, dtype=float)
    out = _sample(F, s, phi.dim) * frac_integral_eval(phi, alpha, s)
    if dF is None:
        return out
    order = np.argsort(s)
    bp = phi.breakpoints
    # geometric points after every breakpoint resolve the (t - t_j)**alpha onsets
    grade = (bp[:-1, None] + np.diff(bp)[:, None] * 0.2 ** np.arange(1, 13)).ravel()
    edges = np.union1d(np.concatenate(([0.0], s, bp, grade)), [])
    edges = edges[edges <= s.max()]
    x, w = gauss_legendre(8)
    half = 0.5 * np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * x
    vals = _sample(dF, nodes.ravel(), phi.dim) * frac_integral_eval(phi, alpha, nodes.ravel())
    seg = np.einsum("eq,eqm->em", half[:, None] * w, vals.reshape(nodes.shape + (phi.dim,)))
    cum = np.vstack([np.zeros(phi.dim), np.cumsum(seg, axis=0)])
    idx = np.searchsorted(edges, s[order])
    out[order] -= cum[idx]
    return out


def b_operator_ratio_probe(
    family: Sequence[Callable[[float], np.ndarray]] | Callable,
    alpha: float,
    F: Callable,
    dF: Callable | None = None,
    *,
    T: float = 1.0,
    levels: Sequence[int] = (1, 2, 3, 4, 5),
) -> ProbeReport:
    """Max over a trajectory family of ``int ||B1 phi||^2 / int ||I^alpha phi||^2``.

    Level ``k`` projects every family member (vectorised ``f(t)`` returning
    shape ``t.shape + (m,)``) onto piecewise linears on ``2**k`` uniform
    intervals of ``[0, T]``. ``F(t)`` and ``dF(t)`` are scalar (or
    broadcastable) functions of time.
    """
    funcs = list(family) if isinstance(family, Sequence) else [family]
    ratios = []
    for k in levels:
        bp = np.linspace(0.0, T, 2**k + 1)
        worst = 0.0
        for f in funcs:
            phi = PiecewiseTrajectory.from_function(f, bp, 1)
            s, w = _outer_rule(bp, T)
            Ia = frac_integral_eval(phi, alpha, s)
            den = float(w @ np.einsum("qm,qm->q", Ia, Ia))
            if den == 0.0:
                continue
            B = b1_values(phi, F, alpha, s, dF)
            worst = max(worst, float(w @ np.einsum("qm,qm->q", B, B)) / den)
        ratios.append(worst)
    return ProbeReport(alpha, list(levels), ratios)
