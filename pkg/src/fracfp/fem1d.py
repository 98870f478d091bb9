"""Piecewise-linear finite elements on an interval with homogeneous Dirichlet data."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre
from scipy import linalg


class ConfigurationError(ValueError):
    """Invalid mesh, coefficient or boundary data."""


def _gauss(npts: int) -> tuple[np.ndarray, np.ndarray]:
    return legendre.leggauss(npts)


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Nodes ``x_0 = x_L < x_1 < ... < x_{M+1} = x_R``."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise ConfigurationError("mesh needs at least one interior node")
        if not np.all(np.diff(x) > 0):
            raise ConfigurationError("mesh nodes must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @classmethod
    def uniform(cls, x_left: float, x_right: float, n_interior: int) -> Mesh1D:
        if n_interior < 1:
            raise ConfigurationError("need at least one interior node")
        return cls(np.linspace(x_left, x_right, n_interior + 2))

    @property
    def x_left(self) -> float:
        return float(self.nodes[0])

    @property
    def x_right(self) -> float:
        return float(self.nodes[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h(self) -> float:
        return float(self.lengths.max())

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    def element_points(self, npts: int) -> tuple[np.ndarray, np.ndarray]:
        """Gauss points and weights on every element, shape (n_elements, npts)."""
        x, w = _gauss(npts)
        a, h = self.nodes[:-1], self.lengths
        pts = a[:, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)
        wts = 0.5 * h[:, None] * w[None, :]
        return pts, wts


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Continuous piecewise-linear functions vanishing at both end points."""

    mesh: Mesh1D

    @property
    def dof(self) -> int:
        return self.mesh.nodes.size - 2

    def shape_values(self, npts: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Element Gauss points, weights and the two local hat values there."""
        pts, wts = self.mesh.element_points(npts)
        a = self.mesh.nodes[:-1, None]
        h = self.mesh.lengths[:, None]
        right = (pts - a) / h
        return pts, wts, 1.0 - right, right

    def full_vector(self, c) -> np.ndarray:
        """Nodal values including the zero boundary values."""
        c = np.asarray(c, dtype=float)
        out = np.zeros(c.shape[:-1] + (self.dof + 2,))
        out[..., 1:-1] = c
        return out

    def evaluate(self, c, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.mesh.nodes, self.full_vector(c))

    @cached_property
    def mass(self) -> BandedOperator:
        return assemble_mass(self)

    @cached_property
    def laplacian(self) -> BandedOperator:
        return assemble_stiffness(self, CoefficientField())


@dataclass(frozen=True, eq=False)
class BandedOperator:
    """Tridiagonal ``M x M`` matrix stored by its three diagonals."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    symmetric: bool = False

    def __post_init__(self) -> None:
        d = np.array(self.diag, dtype=float)
        lo = np.array(self.lower, dtype=float)
        up = np.array(self.upper, dtype=float)
        if lo.shape != (d.size - 1,) or up.shape != (d.size - 1,):
            raise ValueError("off-diagonals must have length M - 1")
        if self.symmetric and not np.array_equal(lo, up):
            raise ValueError("symmetric operator with unequal off-diagonals")
        for name, arr in (("lower", lo), ("diag", d), ("upper", up)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, size: int) -> BandedOperator:
        return cls(np.zeros(size - 1), np.zeros(size), np.zeros(size - 1), True)

    @property
    def size(self) -> int:
        return self.diag.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.size, self.size)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def ab(self) -> np.ndarray:
        """LAPACK general band storage (1 sub-, 1 super-diagonal)."""
        ab = np.zeros((3, self.size))
        ab[0, 1:] = self.upper
        ab[1] = self.diag
        ab[2, :-1] = self.lower
        return ab

    def __matmul__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.size:
            raise ValueError(f"dimension mismatch: {x.shape[0]} vs {self.size}")
        d = self.diag.reshape((-1,) + (1,) * (x.ndim - 1))
        lo = self.lower.reshape((-1,) + (1,) * (x.ndim - 1))
        up = self.upper.reshape((-1,) + (1,) * (x.ndim - 1))
        y = d * x
        y[1:] += lo * x[:-1]
        y[:-1] += up * x[1:]
        return y

    def __add__(self, other: BandedOperator) -> BandedOperator:
        return BandedOperator(
            self.lower + other.lower,
            self.diag + other.diag,
            self.upper + other.upper,
            self.symmetric and other.symmetric,
        )

    def __sub__(self, other: BandedOperator) -> BandedOperator:
        return self + (-1.0) * other

    def __mul__(self, s: float) -> BandedOperator:
        s = float(s)
        return BandedOperator(s * self.lower, s * self.diag, s * self.upper, self.symmetric)

    __rmul__ = __mul__

    def transpose(self) -> BandedOperator:
        return BandedOperator(self.upper, self.diag, self.lower, self.symmetric)

    def quad_form(self, x, y=None) -> float:
        y = x if y is None else y
        return float(np.dot(x, self @ y))

    def cholesky(self) -> tuple[np.ndarray, np.ndarray]:
        """Banded Cholesky factor; raises ``LinAlgError`` if not SPD."""
        if not self.symmetric:
            raise linalg.LinAlgError("Cholesky requires a symmetric operator")
        return linalg.cholesky_banded(np.vstack([np.r_[0.0, self.upper], self.diag]))

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if self.size == 1:
            # LAPACK band drivers reject 1x1 systems
            if self.diag[0] == 0.0:
                raise linalg.LinAlgError("singular 1x1 operator")
            return rhs / self.diag[0]
        if self.symmetric:
            ab = np.vstack([np.r_[0.0, self.upper], self.diag])
            return linalg.solveh_banded(ab, rhs)
        return linalg.solve_banded((1, 1), self.ab(), rhs)


def _const(value: float) -> Callable:
    def f(x, t=0.0):
        return np.full(np.shape(x), value, dtype=float)

    return f


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Diffusivity, forcing vector, its time derivative and the source.

    ``kappa(x)``, ``F(x, t)``, ``dF(x, t)`` and ``g(x, t)`` are vectorised in
    ``x``. The declared bounds are checked against samples on construction.
    """

    kappa: Callable = field(default_factory=lambda: _const(1.0))
    F: Callable = field(default_factory=lambda: _const(0.0))
    dF: Callable = field(default_factory=lambda: _const(0.0))
    g: Callable = field(default_factory=lambda: _const(0.0))
    kappa_min: float | None = None
    domain: tuple[float, float] = (0.0, 1.0)
    final_time: float = 1.0
    F_is_zero: bool | None = None

    def __post_init__(self) -> None:
        xs = np.linspace(*self.domain, 257)
        ks = np.asarray(self.kappa(xs), dtype=float)
        if not np.all(np.isfinite(ks)) or np.any(ks <= 0):
            raise ConfigurationError("diffusivity must be positive and finite")
        kmin = float(ks.min()) if self.kappa_min is None else float(self.kappa_min)
        if kmin <= 0 or kmin > ks.min() * (1 + 1e-12):
            raise ConfigurationError(f"declared kappa_min={kmin} exceeds sampled minimum {ks.min()}")
        object.__setattr__(self, "kappa_min", kmin)
        ts = np.linspace(0.0, self.final_time, 17)
        fmax = dfmax = 0.0
        for t in ts:
            fv = np.asarray(self.F(xs, t), dtype=float)
            dv = np.asarray(self.dF(xs, t), dtype=float)
            if not (np.all(np.isfinite(fv)) and np.all(np.isfinite(dv))):
                raise ConfigurationError("forcing vector must be finite")
            fmax = max(fmax, float(np.max(np.abs(fv))))
            dfmax = max(dfmax, float(np.max(np.abs(dv))))
        object.__setattr__(self, "F_sup", fmax)
        object.__setattr__(self, "dF_sup", dfmax)
        if self.F_is_zero is None:
            object.__setattr__(self, "F_is_zero", fmax == 0.0 and dfmax == 0.0)

    @property
    def time_independent_F(self) -> bool:
        return self.dF_sup == 0.0


def assemble_mass(space: FeSpace) -> BandedOperator:
    """Exact element mass matrices ``h/6 [[2, 1], [1, 2]]``."""
    h = space.mesh.lengths
    diag_full = np.zeros(h.size + 1)
    diag_full[:-1] += h / 3.0
    diag_full[1:] += h / 3.0
    off_full = h / 6.0
    off = off_full[1:-1]
    return BandedOperator(off, diag_full[1:-1], off, True)


def assemble_stiffness(space: FeSpace, fields: CoefficientField) -> BandedOperator:
    """``A_ij = int kappa phi_j' phi_i'`` with 3-point Gauss per element."""
    pts, wts, _, _ = space.shape_values(3)
    kv = np.asarray(fields.kappa(pts), dtype=float)
    if np.any(kv <= 0):
        raise ConfigurationError("diffusivity sample <= 0")
    h = space.mesh.lengths
    ke = (kv * wts).sum(axis=1) / h**2
    diag_full = np.zeros(h.size + 1)
    diag_full[:-1] += ke
    diag_full[1:] += ke
    off = -ke[1:-1]
    return BandedOperator(off, diag_full[1:-1], off, True)


def assemble_convection(space: FeSpace, fields: CoefficientField, t: float, *, derivative: bool = False) -> BandedOperator:
    """``C_ij = int F(x, t) phi_j phi_i'`` with 3-point Gauss per element.

    ``derivative=True`` assembles the same form with ``dF`` in place of ``F``.
    """
    pts, wts, left, right = space.shape_values(3)
    fun = fields.dF if derivative else fields.F
    fv = np.asarray(fun(pts, t), dtype=float) * wts
    h = space.mesh.lengths
    # on element e: phi_left' = -1/h, phi_right' = +1/h
    int_left = (fv * left).sum(axis=1) / h
    int_right = (fv * right).sum(axis=1) / h
    n = h.size + 1
    diag_full = np.zeros(n)
    upper_full = np.zeros(n - 1)  # (i, i+1): test left node, trial right node
    lower_full = np.zeros(n - 1)  # (i+1, i): test right node, trial left node
    diag_full[:-1] += -int_left
    diag_full[1:] += int_right
    upper_full += -int_right
    lower_full += int_left
    return BandedOperator(lower_full[1:-1], diag_full[1:-1], upper_full[1:-1], False)


def load_vector(space: FeSpace, v: Callable, npts: int = 5) -> np.ndarray:
    """``b_i = int v phi_i`` for a vectorised ``v(x)``."""
    pts, wts, left, right = space.shape_values(npts)
    vw = np.asarray(v(pts), dtype=float) * wts
    full = np.zeros(space.dof + 2)
    full[:-1] += (vw * left).sum(axis=1)
    full[1:] += (vw * right).sum(axis=1)
    return full[1:-1]


def l2_project(space: FeSpace, v: Callable) -> np.ndarray:
    """Coefficients of the L2-orthogonal projection of ``v`` onto the space."""
    return space.mass.solve(load_vector(space, v))


def ritz_project(
    space: FeSpace,
    kappa: CoefficientField | Callable,
    v: Callable,
    v_prime: Callable,
    *,
    bc_tol: float = 1e-10,
) -> np.ndarray:
    """Galerkin solution of ``-(kappa v')' + v`` with data from ``v``.

    Satisfies ``<kappa (Rv)', chi'> + <Rv, chi> = <kappa v', chi'> + <v, chi>``
    for every finite element ``chi``.
    """
    fields = kappa if isinstance(kappa, CoefficientField) else CoefficientField(kappa=kappa)
    ends = np.asarray(v(np.array([space.mesh.x_left, space.mesh.x_right])), dtype=float)
    scale = max(1.0, float(np.max(np.abs(v(space.mesh.nodes)))))
    if np.max(np.abs(ends)) > bc_tol * scale:
        raise ConfigurationError("function does not vanish on the boundary")
    # 8 points keep the load error below the orthogonality checks on coarse elements
    pts, wts, left, right = space.shape_values(8)
    h = space.mesh.lengths[:, None]
    kd = np.asarray(fields.kappa(pts), dtype=float) * np.asarray(v_prime(pts), dtype=float) * wts
    vw = np.asarray(v(pts), dtype=float) * wts
    full = np.zeros(space.dof + 2)
    full[:-1] += (-kd / h + vw * left).sum(axis=1)
    full[1:] += (kd / h + vw * right).sum(axis=1)
    op = assemble_stiffness(space, fields) + space.mass
    return op.solve(full[1:-1])


def norms(space: FeSpace, c, exact: Callable | None = None, exact_prime: Callable | None = None) -> dict:
    """L2 norm and H1 seminorm of a finite element function.

    With ``exact``/``exact_prime`` given, the norms of ``u_h - exact`` are
    returned instead, using 5-point Gauss per element.
    """
    c = np.asarray(c, dtype=float)
    if exact is None:
        l2 = math.sqrt(max(space.mass.quad_form(c), 0.0))
        h1 = math.sqrt(max(space.laplacian.quad_form(c), 0.0))
        return {"l2": l2, "h1_semi": h1}
    pts, wts, left, right = space.shape_values(5)
    full = space.full_vector(c)
    uh = full[:-1, None] * left + full[1:, None] * right
    duh = (np.diff(full) / space.mesh.lengths)[:, None]
    e0 = uh - np.asarray(exact(pts), dtype=float)
    out = {"l2": math.sqrt(float((e0**2 * wts).sum()))}
    if exact_prime is not None:
        e1 = duh - np.asarray(exact_prime(pts), dtype=float)
        out["h1_semi"] = math.sqrt(float((e1**2 * wts).sum()))
    else:
        out["h1_semi"] = float("nan")
    return out


def poincare_constant(x_left: float, x_right: float) -> float:
    """``(x_R - x_L)**2 / pi**2``, the reciprocal of the first Dirichlet eigenvalue."""
    if not x_right > x_left:
        raise ConfigurationError("degenerate interval")
    return (x_right - x_left) ** 2 / math.pi**2


def discrete_poincare_constant(space: FeSpace) -> float:
    """``max ||v||^2 / ||v'||^2`` over the space, i.e. ``1 / lambda_min(A, M)``."""
    lam = linalg.eigh(
        space.laplacian.to_dense(), space.mass.to_dense(), eigvals_only=True, subset_by_index=[0, 0]
    )
    return 1.0 / float(lam[0])
