"""Piecewise-polynomial, vector-valued functions of time.

On each interval ``I_n = [t_{n-1}, t_n]`` the trajectory is stored in the
local Legendre basis ``P_l(tau)`` with ``tau = 2 (s - t_{n-1}) / k_n - 1``.
Coefficient blocks are padded to a common degree; entries above the
interval's own degree are kept at exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre

#: Highest local degree. Degree 3 is only reached by ``times_t`` applied to
#: quadratic pieces; solvers use degree <= 1.
MAX_DEGREE = 3


def _leg2pow_matrix(degree: int) -> np.ndarray:
    """Matrix mapping Legendre coefficients to monomial coefficients in tau."""
    mat = np.zeros((degree + 1, degree + 1))
    for l in range(degree + 1):
        e = np.zeros(degree + 1)
        e[l] = 1.0
        pw = legendre.leg2poly(e)
        mat[: pw.size, l] = pw
    return mat


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PiecewiseTrajectory:
    """Vector-valued piecewise polynomial on a partition of ``[0, T]``.

    Attributes
    ----------
    breakpoints : ndarray, shape (N + 1,)
        ``0 = t_0 < t_1 < ... < t_N = T``.
    coeffs : ndarray, shape (N, d + 1, m)
        Local Legendre coefficients, ``d = max(degrees)``.
    degrees : ndarray of int, shape (N,)
    """

    breakpoints: np.ndarray
    coeffs: np.ndarray
    degrees: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        t = np.asarray(self.breakpoints, dtype=float)
        c = np.asarray(self.coeffs, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.diff(t) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if c.ndim == 2:
            c = c[:, :, None]
        if c.ndim != 3 or c.shape[0] != t.size - 1:
            raise ValueError(
                f"coeffs must have shape (N, d+1, m) with N={t.size - 1}, got {c.shape}"
            )
        if c.shape[1] - 1 > MAX_DEGREE:
            raise ValueError(f"local degree above {MAX_DEGREE} is not supported")
        if self.degrees is None:
            deg = np.full(c.shape[0], c.shape[1] - 1, dtype=int)
        else:
            deg = np.asarray(self.degrees, dtype=int)
            if deg.shape != (c.shape[0],):
                raise ValueError("one degree per interval required")
            if np.any(deg < 0) or np.any(deg > c.shape[1] - 1):
                raise ValueError("degree out of range for coefficient array")
            for n, p in enumerate(deg):
                if np.any(c[n, p + 1 :] != 0.0):
                    raise ValueError(f"interval {n} has coefficients above its degree {p}")
        object.__setattr__(self, "breakpoints", _freeze(t))
        object.__setattr__(self, "coeffs", _freeze(c))
        deg = np.array(deg, dtype=int)
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def from_blocks(cls, breakpoints, blocks) -> PiecewiseTrajectory:
        """Build from one ``(p_n + 1, m)`` Legendre block per interval.

        A 1-D block is read as the Legendre coefficients of a scalar piece.
        """
        blocks = [np.asarray(b, dtype=float) for b in blocks]
        # 1-D blocks are scalar trajectories: one coefficient per Legendre mode
        blocks = [b.reshape(-1, 1) if b.ndim == 1 else b for b in blocks]
        m = blocks[0].shape[1]
        d = max(b.shape[0] for b in blocks) - 1
        c = np.zeros((len(blocks), d + 1, m))
        for n, b in enumerate(blocks):
            if b.shape[1] != m:
                raise ValueError("all blocks must share the value dimension")
            c[n, : b.shape[0]] = b
        return cls(breakpoints, c, [b.shape[0] - 1 for b in blocks])

    @classmethod
    def constant(cls, value, breakpoints) -> PiecewiseTrajectory:
        value = np.atleast_1d(np.asarray(value, dtype=float))
        n = len(breakpoints) - 1
        return cls(breakpoints, np.broadcast_to(value, (n, 1, value.size)).copy())

    @classmethod
    def from_nodal(cls, breakpoints, values) -> PiecewiseTrajectory:
        """Continuous piecewise-linear interpolant of values at the breakpoints."""
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        c = np.empty((v.shape[0] - 1, 2, v.shape[1]))
        c[:, 0] = 0.5 * (v[1:] + v[:-1])
        c[:, 1] = 0.5 * (v[1:] - v[:-1])
        return cls(breakpoints, c)

    @classmethod
    def from_function(cls, f, breakpoints, degree: int) -> PiecewiseTrajectory:
        """Interval-wise Legendre projection of ``f`` (exact for polynomials)."""
        x, w = legendre.leggauss(degree + 2)
        t = np.asarray(breakpoints, dtype=float)
        a, b = t[:-1], t[1:]
        s = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x[None, :]
        vals = np.asarray(f(s.ravel()), dtype=float).reshape(s.shape + (-1,))
        P = np.stack([legendre.legval(x, np.eye(degree + 1)[l]) for l in range(degree + 1)])
        norm = (2 * np.arange(degree + 1) + 1) / 2.0
        c = np.einsum("lq,q,nqm->nlm", P, w, vals) * norm[None, :, None]
        return cls(t, c)

    # ------------------------------------------------------------------
    # basic properties

    @property
    def n_intervals(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dim(self) -> int:
        return self.coeffs.shape[2]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def final_time(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @cached_property
    def power_coeffs(self) -> np.ndarray:
        """Monomial coefficients in the local variable tau, shape (N, d+1, m)."""
        return np.einsum("rl,nlm->nrm", _leg2pow_matrix(self.degree), self.coeffs)

    # ------------------------------------------------------------------
    # evaluation

    def interval_index(self, t, side: str = "left") -> np.ndarray:
        """Index ``n`` (0-based) of the interval used to evaluate at ``t``.

        ``side="left"`` selects ``(t_n, t_{n+1}]`` (left limits at
        breakpoints), ``side="right"`` selects ``[t_n, t_{n+1})``.
        """
        t = np.asarray(t, dtype=float)
        inner = self.breakpoints[1:-1]
        if side == "left":
            idx = np.searchsorted(inner, t, side="left")
        elif side == "right":
            idx = np.searchsorted(inner, t, side="right")
        else:
            raise ValueError("side must be 'left' or 'right'")
        return idx

    def _check_times(self, t: np.ndarray) -> None:
        T = self.final_time
        tol = 1e-13 * max(1.0, T)
        if np.any(t < -tol) or np.any(t > T + tol):
            raise ValueError(f"time outside [0, {T}]")

    def __call__(self, t, side: str = "left") -> np.ndarray:
        """Evaluate at ``t``; returns shape ``(m,)`` or ``t.shape + (m,)``."""
        t_arr = np.asarray(t, dtype=float)
        self._check_times(t_arr)
        flat = t_arr.ravel()
        idx = self.interval_index(flat, side)
        a = self.breakpoints[idx]
        k = self.breakpoints[idx + 1] - a
        tau = np.clip(2.0 * (flat - a) / k - 1.0, -1.0, 1.0)
        # Legendre recurrence, vectorised over evaluation points
        out = np.zeros((flat.size, self.dim))
        p_prev = np.ones_like(tau)
        p_cur = tau
        out += p_prev[:, None] * self.coeffs[idx, 0]
        if self.degree >= 1:
            out += p_cur[:, None] * self.coeffs[idx, 1]
        for l in range(1, self.degree):
            p_next = ((2 * l + 1) * tau * p_cur - l * p_prev) / (l + 1)
            out += p_next[:, None] * self.coeffs[idx, l + 1]
            p_prev, p_cur = p_cur, p_next
        return out.reshape(t_arr.shape + (self.dim,))

    def left_limit(self, n: int) -> np.ndarray:
        """``X^n_-``, the limit from below at ``t_n`` (``1 <= n <= N``)."""
        if not 1 <= n <= self.n_intervals:
            raise IndexError(n)
        return self.coeffs[n - 1].sum(axis=0)

    def right_limit(self, n: int) -> np.ndarray:
        """``X^n_+``, the limit from above at ``t_n`` (``0 <= n <= N - 1``)."""
        if not 0 <= n < self.n_intervals:
            raise IndexError(n)
        signs = (-1.0) ** np.arange(self.degree + 1)
        return signs @ self.coeffs[n]

    @cached_property
    def end_values(self) -> np.ndarray:
        """``X^n_-`` for ``n = 1..N``, shape (N, m)."""
        return self.coeffs.sum(axis=1)

    @cached_property
    def start_values(self) -> np.ndarray:
        """``X^n_+`` for ``n = 0..N-1``, shape (N, m)."""
        signs = (-1.0) ** np.arange(self.degree + 1)
        return np.einsum("l,nlm->nm", signs, self.coeffs)

    def jumps(self) -> np.ndarray:
        """``[X]^n = X^n_+ - X^n_-`` at interior breakpoints ``n = 1..N-1``."""
        return self.start_values[1:] - self.end_values[:-1]

    def is_continuous(self, rtol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs), initial=0.0)))
        j = self.jumps()
        return j.size == 0 or float(np.max(np.abs(j))) <= rtol * scale

    # ------------------------------------------------------------------
    # derived trajectories

    def derivative(self) -> PiecewiseTrajectory:
        """Interval-wise time derivative (ignores jumps)."""
        d = self.degree
        if d == 0:
            return PiecewiseTrajectory(self.breakpoints, np.zeros_like(self.coeffs), self.degrees)
        scale = 2.0 / self.steps
        c = np.zeros((self.n_intervals, d, self.dim))
        for n in range(self.n_intervals):
            c[n] = legendre.legder(self.coeffs[n], axis=0) * scale[n]
        return PiecewiseTrajectory(self.breakpoints, c, np.maximum(self.degrees - 1, 0))

    def times_t(self) -> PiecewiseTrajectory:
        """The trajectory ``s -> s * phi(s)``."""
        d = self.degree + 1
        if d > MAX_DEGREE:
            raise ValueError(f"product with t would exceed degree {MAX_DEGREE}")
        t = self.breakpoints
        mid = 0.5 * (t[1:] + t[:-1])
        half = 0.5 * np.diff(t)
        c = np.zeros((self.n_intervals, d + 1, self.dim))
        for n in range(self.n_intervals):
            c[n, :d] = mid[n] * self.coeffs[n]
            c[n] += half[n] * _legmulx(self.coeffs[n])
        return PiecewiseTrajectory(t, c, self.degrees + 1)

    def map_values(self, matrix) -> PiecewiseTrajectory:
        """Apply a linear map to every coefficient vector (``m -> m'``)."""
        c = np.einsum("ij,nlj->nli", np.asarray(matrix, dtype=float), self.coeffs)
        return PiecewiseTrajectory(self.breakpoints, c, self.degrees)

    def __add__(self, other: PiecewiseTrajectory) -> PiecewiseTrajectory:
        if not np.array_equal(self.breakpoints, other.breakpoints):
            raise ValueError("trajectories must share breakpoints")
        d = max(self.degree, other.degree)
        c = np.zeros((self.n_intervals, d + 1, self.dim))
        c[:, : self.degree + 1] += self.coeffs
        c[:, : other.degree + 1] += other.coeffs
        return PiecewiseTrajectory(self.breakpoints, c, np.maximum(self.degrees, other.degrees))

    def __mul__(self, scalar: float) -> PiecewiseTrajectory:
        return PiecewiseTrajectory(self.breakpoints, float(scalar) * self.coeffs, self.degrees)

    __rmul__ = __mul__


def _legmulx(c: np.ndarray) -> np.ndarray:
    """Multiply a Legendre series (leading axis) by tau; output has one more row."""
    out = np.zeros((c.shape[0] + 1,) + c.shape[1:])
    out[1] += c[0]
    for l in range(1, c.shape[0]):
        out[l + 1] += c[l] * (l + 1) / (2 * l + 1)
        out[l - 1] += c[l] * l / (2 * l + 1)
    return out
