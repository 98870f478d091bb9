"""Fixed catalog of coefficient, source and initial-data expressions.

Every entry is built for a concrete domain ``(x_L, x_R)``; ``s`` below is the
rescaled coordinate ``(x - x_L) / (x_R - x_L)``.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

KINDS = ("kappa", "F", "g", "u0")


@dataclass(frozen=True)
class Entry:
    """``build(domain)`` returns the function and its companion.

    The companion is ``dF/dt`` for ``F`` entries and ``du0/dx`` for ``u0``
    entries (``None`` otherwise). ``modes`` lists ``(m, a_m)`` for pure sine
    initial data.
    """

    ident: str
    description: str
    build: Callable
    modes: tuple = ()
    constant: float | None = None


def _scaled(domain):
    xl, xr = domain
    L = xr - xl
    return xl, L


def _const_x(c):
    def build(domain):
        def f(x):
            return np.full(np.shape(x), c, dtype=float)

        return f, None

    return build


def _const_xt(c):
    def build(domain):
        def f(x, t=0.0):
            return np.full(np.shape(x), c, dtype=float)

        def df(x, t=0.0):
            return np.zeros(np.shape(x))

        return f, df

    return build


def _sin_u0(m, a=1.0):
    def build(domain):
        xl, L = _scaled(domain)
        w = m * math.pi / L

        def u(x):
            return a * np.sin(w * (np.asarray(x) - xl))

        def du(x):
            return a * w * np.cos(w * (np.asarray(x) - xl))

        return u, du

    return build


def _bump(domain):
    xl, L = _scaled(domain)

    def u(x):
        s = (np.asarray(x) - xl) / L
        return 4.0 * s * (1.0 - s)

    def du(x):
        s = (np.asarray(x) - xl) / L
        return 4.0 * (1.0 - 2.0 * s) / L

    return u, du


def _g_sin(time_factor):
    def build(domain):
        xl, L = _scaled(domain)

        def g(x, t):
            return time_factor(t) * np.sin(math.pi * (np.asarray(x) - xl) / L)

        return g, None

    return build


def _kappa_affine(domain):
    xl, L = _scaled(domain)

    def k(x):
        return 1.0 + 0.5 * (np.asarray(x) - xl) / L

    return k, None


def _F_tgrow(domain):
    def F(x, t=0.0):
        return np.full(np.shape(x), 1.0 + t)

    def dF(x, t=0.0):
        return np.ones(np.shape(x))

    return F, dF


def _F_xsin(domain):
    xl, L = _scaled(domain)

    def F(x, t=0.0):
        return np.sin(math.pi * (np.asarray(x) - xl) / L)

    def dF(x, t=0.0):
        return np.zeros(np.shape(x))

    return F, dF


CATALOG: dict[str, Entry] = {
    e.ident: e
    for e in [
        Entry("kappa:one", "kappa = 1", _const_x(1.0), constant=1.0),
        Entry("kappa:half", "kappa = 1/2", _const_x(0.5), constant=0.5),
        Entry("kappa:affine", "kappa = 1 + s/2", _kappa_affine),
        Entry("F:zero", "F = 0", _const_xt(0.0), constant=0.0),
        Entry("F:const1", "F = 1", _const_xt(1.0), constant=1.0),
        Entry("F:tgrow", "F = 1 + t", _F_tgrow),
        Entry("F:xsin", "F = sin(pi s)", _F_xsin),
        Entry("g:zero", "g = 0", _g_sin(lambda t: 0.0)),
        Entry("g:sin1", "g = sin(pi s)", _g_sin(lambda t: 1.0)),
        Entry("g:tsin", "g = t sin(pi s)", _g_sin(lambda t: t)),
        Entry("u0:zero", "u0 = 0", _sin_u0(1, 0.0), modes=()),
        Entry("u0:sin1", "u0 = sin(pi s)", _sin_u0(1), modes=((1, 1.0),)),
        Entry("u0:sin2", "u0 = sin(2 pi s)", _sin_u0(2), modes=((2, 1.0),)),
        Entry("u0:bump", "u0 = 4 s (1 - s)", _bump),
    ]
}


def lookup(ident: str, kind: str) -> Entry:
    if ident not in CATALOG or not ident.startswith(kind + ":"):
        known = ", ".join(k for k in CATALOG if k.startswith(kind + ":"))
        raise KeyError(f"unknown {kind} expression {ident!r}; known: {known}")
    return CATALOG[ident]


def list_catalog() -> str:
    """One line per entry, grouped by kind."""
    lines = []
    for kind in KINDS:
        lines.append(f"[{kind}]")
        for e in CATALOG.values():
            if e.ident.startswith(kind + ":"):
                lines.append(f"  {e.ident:<14} {e.description}")
    lines.append("  (s = (x - x_L) / (x_R - x_L))")
    return "\n".join(lines)
