"""Fractional integrals and derivatives of piecewise-polynomial trajectories."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .kernel import _omega0, check_order, monomial_weights
from .quadrature import graded_gauss
from .trajectory import PiecewiseTrajectory

# cap on (evaluation points x intervals) per vectorised block
_BLOCK = 2_000_000


def _as_times(phi: PiecewiseTrajectory, t) -> tuple[np.ndarray, bool]:
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    flat = np.atleast_1d(t_arr).ravel()
    T = phi.final_time
    tol = 1e-13 * max(1.0, T)
    if np.any(flat < -tol) or np.any(flat > T + tol):
        raise ValueError(f"time outside [0, {T}]")
    return np.clip(flat, 0.0, T), scalar


def frac_integral_eval(phi: PiecewiseTrajectory, mu: float, t) -> np.ndarray:
    """Exact value of ``(I^mu phi)(t) = int_0^t omega_mu(t - s) phi(s) ds``.

    ``t`` may be a scalar (result shape ``(m,)``) or an array (result shape
    ``t.shape + (m,)``). ``mu = 0`` returns ``phi(t)`` using left limits.
    """
    mu = check_order(mu)
    t_arr = np.asarray(t, dtype=float)
    if mu == 0.0:
        return phi(t_arr, side="left")
    flat, scalar = _as_times(phi, t_arr)
    a = phi.breakpoints[:-1]
    b = phi.breakpoints[1:]
    P = phi.power_coeffs
    out = np.empty((flat.size, phi.dim))
    step = max(1, _BLOCK // max(1, phi.n_intervals * (phi.degree + 1)))
    for lo in range(0, flat.size, step):
        tt = flat[lo : lo + step]
        W = monomial_weights(a[None, :], b[None, :], tt[:, None], mu, phi.degree)
        out[lo : lo + step] = np.einsum("knr,nrm->km", W, P)
    if scalar:
        return out[0]
    return out.reshape(t_arr.shape + (phi.dim,))


def rl_derivative_eval(phi: PiecewiseTrajectory, alpha: float, t, *, jump_tol: float = 1e-10):
    """Riemann-Liouville derivative ``d/dt I^alpha phi`` of order ``1 - alpha``.

    Uses ``phi(0) omega_alpha(t) + I^alpha phi'``, valid for continuous
    ``phi``; a trajectory with jumps above ``jump_tol`` (relative) is
    rejected. ``alpha = 1`` is the identity.
    """
    alpha = check_order(alpha, allow_zero=False, upper=1.0)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("Riemann-Liouville derivative needs t > 0")
    if not phi.is_continuous(jump_tol):
        raise ValueError("trajectory is discontinuous; derivative formula does not apply")
    if alpha == 1.0:
        return phi(t_arr)
    phi0 = phi(0.0, side="right")
    w = _omega0(alpha, np.atleast_1d(t_arr)).reshape(t_arr.shape)
    return w[..., None] * phi0 + frac_integral_eval(phi.derivative(), alpha, t_arr)


def _graded_rule(breakpoints, t):
    return graded_gauss(breakpoints, t, npts=8, levels=14, ratio=0.2)


def operator_B1(
    phi: PiecewiseTrajectory,
    F: Callable,
    alpha: float,
    t: float,
    dF: Callable | None = None,
    *,
    rule: Callable | None = None,
) -> np.ndarray:
    """``int_0^t F(s) (d/ds I^alpha phi)(s) ds`` after integration by parts.

    Evaluated as ``F(t) (I^alpha phi)(t) - int_0^t F'(s) (I^alpha phi)(s) ds``
    with the outer integral by ``rule(breakpoints, t)`` (default: Gauss graded
    towards every breakpoint, where ``I^alpha phi`` has its ``(t - t_j)**alpha``
    onsets). ``F`` and
    ``dF`` map a time to a scalar or an array broadcastable against the
    ``m`` trajectory components. ``dF=None`` declares ``F`` time-independent.
    """
    alpha = check_order(alpha, allow_zero=False, upper=1.0)
    t = float(t)
    if t == 0.0:
        return np.zeros(phi.dim)
    val = np.asarray(F(t), dtype=float) * frac_integral_eval(phi, alpha, t)
    if dF is None:
        return np.broadcast_to(val, (phi.dim,)).copy()
    s, w = (rule or _graded_rule)(phi.breakpoints, t)
    Ia = frac_integral_eval(phi, alpha, s)
    dFs = np.stack([np.broadcast_to(np.asarray(dF(si), dtype=float), (phi.dim,)) for si in s])
    return val - np.einsum("q,qm->m", w, dFs * Ia)


def _inner(ip, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise ``<x_q, y_q>_ip`` for stacks of vectors (shape (Q, m))."""
    if ip is None:
        return np.einsum("qm,qm->q", x, y)
    Y = ip @ y.T
    return np.einsum("qm,mq->q", x, np.asarray(Y))


def history_inner_integral(
    phi: PiecewiseTrajectory, mu: float, t: float, ip=None, *, rule=None
) -> float:
    """``int_0^t <phi(s), (I^mu phi)(s)>_ip ds``.

    ``ip`` is ``None`` (Euclidean) or any symmetric positive semidefinite
    operator supporting ``ip @ array``. The outer integral uses Gauss rules
    graded towards every breakpoint, where ``I^mu phi`` has its
    ``(s - t_j)**mu`` onsets, unless a ``rule(breakpoints, t)`` returning
    nodes and weights is supplied.
    """
    mu = check_order(mu)
    t = float(t)
    if t <= 0.0:
        return 0.0
    s, w = (rule or _graded_rule)(phi.breakpoints, t)
    x = phi(s)
    y = frac_integral_eval(phi, mu, s)
    return float(w @ _inner(ip, x, y))
