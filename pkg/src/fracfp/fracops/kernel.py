"""Closed-form moments of the Riemann-Liouville kernel over one time interval."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma

#: Largest fractional order accepted by the public operations.
MAX_ORDER = 2.0

# far-field binomial series length; ratio <= 1/3 gives 3**-40 ~ 1e-19
_FAR_TERMS = 40


def check_order(mu: float, *, allow_zero: bool = True, upper: float = MAX_ORDER) -> float:
    mu = float(mu)
    lo_ok = mu >= 0.0 if allow_zero else mu > 0.0
    if not (lo_ok and mu <= upper) or math.isnan(mu):
        bound = "[0" if allow_zero else "(0"
        raise ValueError(f"order {mu} outside {bound}, {upper}]")
    return mu


def omega(mu: float, t):
    """The kernel ``t**(mu - 1) / Gamma(mu)`` for ``mu > 0`` and ``t > 0``."""
    mu = float(mu)
    if not mu > 0:
        raise ValueError(f"omega needs mu > 0, got {mu}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("omega needs t > 0")
    out = t ** (mu - 1.0) / _gamma(mu)
    return float(out) if out.ndim == 0 else out


def _omega0(mu: float, t: np.ndarray) -> np.ndarray:
    """``omega`` extended by zero for ``t <= 0`` (no validation)."""
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    out[pos] = t[pos] ** (mu - 1.0) / _gamma(mu)
    return out


@dataclass(frozen=True)
class FracKernel:
    """Order ``mu`` with cached Gamma values."""

    mu: float
    gammas: tuple = field(init=False, repr=False)

    def __post_init__(self) -> None:
        check_order(self.mu, allow_zero=False)
        object.__setattr__(
            self, "gammas", (math.gamma(self.mu), math.gamma(self.mu + 1), math.gamma(self.mu + 2))
        )

    def __call__(self, t):
        return omega(self.mu, t)


def _power_moments(q: np.ndarray) -> np.ndarray:
    """``int_{-1}^{1} tau**q dtau`` for integer arrays ``q``."""
    return np.where(q % 2 == 0, 2.0 / (q + 1.0), 0.0)


def monomial_weights(a, b, t, mu: float, degree: int) -> np.ndarray:
    """Weights ``W[..., r] = int_a^{min(b,t)} omega_mu(t - s) tau(s)**r ds``.

    ``tau`` is the local coordinate of ``[a, b]`` mapped to ``[-1, 1]``;
    arrays ``a``, ``b``, ``t`` broadcast together and the result has one
    trailing axis of length ``degree + 1``. Intervals with ``t <= a`` give 0.

    Two regimes are used. When ``t - b < b - a`` (including ``t`` inside
    the interval) the piece is expanded in powers of ``t - s`` and each
    power integrated exactly; the expansion point is at most two interval
    lengths away, so the binomial terms stay O(1). Otherwise the kernel is
    smooth on ``[a, b]`` and ``(t - s)**(mu-1)`` is expanded about the
    midpoint in powers of ``(b - a) / (2 (t - mid)) <= 1/3``, which avoids
    the cancellation a ``t - s`` expansion would suffer there.
    """
    mu = float(mu)
    a, b, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, t)))
    out = np.zeros(a.shape + (degree + 1,))
    k = b - a
    active = t > a
    far = active & (t - b >= k)
    near = active & ~far
    g_mu = _gamma(mu)

    if np.any(near):
        an, bn, tn, kn = a[near], b[near], t[near], k[near]
        ta = tn - an
        tb = np.maximum(tn - bn, 0.0)
        # rho * (t - a) = tau(t) + 1, rho * (t - b') = tau(t) - 1 (or 0 inside)
        rho = 2.0 / kn
        tau_t = rho * ta - 1.0
        # J[i] = rho**i * int omega_mu(t-s) (t-s)**i ds
        J = np.empty((degree + 1,) + an.shape)
        ua = ta**mu
        ub = tb**mu
        for i in range(degree + 1):
            J[i] = ((rho * ta) ** i * ua - (rho * tb) ** i * ub) / ((mu + i) * g_mu)
        for r in range(degree + 1):
            acc = np.zeros_like(an)
            for i in range(r + 1):
                acc += math.comb(r, i) * tau_t ** (r - i) * (-1.0) ** i * J[i]
            out[near, r] = acc

    if np.any(far):
        af, bf, tf = a[far], b[far], t[far]
        h = 0.5 * (bf - af)
        D = tf - 0.5 * (af + bf)
        eps = h / D
        pref = h * D ** (mu - 1.0) / g_mu
        acc = np.zeros((degree + 1,) + af.shape)
        coef = 1.0
        epow = np.ones_like(af)
        r_idx = np.arange(degree + 1)
        for i in range(_FAR_TERMS):
            m = _power_moments(i + r_idx)
            acc += (coef * m)[:, None] * epow[None, :]
            coef *= (mu - 1.0 - i) / (i + 1.0)
            epow = -epow * eps
            if coef == 0.0:
                break
        out[far] = (pref[None, :] * acc).T

    return out
