"""Real-argument Mittag-Leffler function ``E_mu(z) = sum z**n / Gamma(1 + n mu)``."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

Z_MIN = -1.0e4
Z_MAX = 10.0

# |z| below this uses the power series directly
_SERIES_RADIUS = 1.0


def _series(mu: float, z: float) -> float:
    """Power series with exactly rounded summation; for z < 0 only |z| <= 1."""
    logabs = math.log(abs(z))
    sign = -1.0 if z < 0 else 1.0
    terms = [1.0]
    n = 1
    while True:
        term = sign**n * math.exp(n * logabs - math.lgamma(1.0 + n * mu))
        terms.append(term)
        # terms grow until roughly n * mu ~ z**(1/mu), then decay
        if n > 5 and abs(term) < 1e-18 * abs(math.fsum(terms)):
            break
        n += 1
        if n > 20000:
            raise ArithmeticError("Mittag-Leffler series failed to converge")
    return math.fsum(terms)


def _negative_integral(mu: float, x: float) -> float:
    """``E_mu(-x)`` for ``0 < mu < 1`` and ``x > 0`` from its Laplace-type integral.

    With ``rho = r**mu`` the completely monotone representation becomes
    ``sin(mu pi) / (mu pi) * int_0^inf exp(-(x rho)**(1/mu)) /
    (rho**2 + 2 rho cos(mu pi) + 1) d rho``, whose integrand is smooth and
    bounded; it peaks near ``rho = 1`` when ``mu`` is close to 1.
    """
    c = math.cos(mu * math.pi)
    inv = 1.0 / mu

    def f(rho):
        return math.exp(-((x * rho) ** inv)) / (rho * rho + 2.0 * rho * c + 1.0)

    # the exponential factor is below 1e-300 past rho_cut
    rho_cut = 700.0**mu / x
    width = max(math.sin(mu * math.pi), 1e-6)
    pts = sorted({p for p in (1.0 - width, 1.0, 1.0 + width) if 0.0 < p < min(2.0, rho_cut)})
    upper = min(2.0, rho_cut)
    val, _ = integrate.quad(f, 0.0, upper, points=pts or None, epsabs=1e-15, epsrel=1e-13, limit=400)
    if rho_cut > 2.0:
        tail, _ = integrate.quad(f, 2.0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=400)
        val += tail
    return math.sin(mu * math.pi) / (mu * math.pi) * val


def mittag_leffler(mu: float, z: float) -> float:
    """One-parameter Mittag-Leffler function for ``0 < mu <= 1``, real ``z``.

    Supported range is ``-1e4 <= z <= 10``; positive ``z`` may overflow for
    small ``mu`` (``E_mu(z) ~ exp(z**(1/mu)) / mu``), raising
    ``OverflowError``.
    """
    mu = float(mu)
    z = float(z)
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"Mittag-Leffler order must lie in (0, 1], got {mu}")
    if not Z_MIN <= z <= Z_MAX:
        raise ValueError(f"argument {z} outside supported range [{Z_MIN}, {Z_MAX}]")
    if mu == 1.0:
        return math.exp(z)
    if z == 0.0:
        return 1.0
    if z > 0.0:
        if z ** (1.0 / mu) > 700.0:
            raise OverflowError(f"E_{mu}({z}) overflows double precision")
        return _series(mu, z)
    if -z <= _SERIES_RADIUS:
        return _series(mu, z)
    return _negative_integral(mu, -z)


def mittag_leffler_array(mu: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.vectorize(lambda v: mittag_leffler(mu, v), otypes=[float])(z)


def gronwall_bound(a: float, b: float, mu: float, t: float) -> float:
    """``a * E_mu(b * t**mu)``: bound on ``y`` when ``y <= a + b * I^mu y``."""
    if a < 0 or b < 0:
        raise ValueError("a and b must be non-negative")
    if not mu > 0:
        raise ValueError("mu must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    if a == 0.0:
        return 0.0
    return a * mittag_leffler(mu, b * t**mu)
