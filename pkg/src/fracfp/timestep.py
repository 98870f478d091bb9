"""Fully discrete solvers: DG time stepping, a first-order scheme for general
forcing, and the modal reference solution for constant diffusivity."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg

from .fem1d import (
    BandedOperator,
    CoefficientField,
    ConfigurationError,
    FeSpace,
    assemble_convection,
    assemble_stiffness,
    l2_project,
    load_vector,
    ritz_project,
)
from .fracops import PiecewiseTrajectory, gauss_legendre, mittag_leffler, monomial_weights

INITIAL_DATA = ("l2", "ritz", "nodal")


class SolverError(RuntimeError):
    """A step matrix could not be factorised."""


def default_grading(alpha: float) -> float:
    """``min(2 / alpha, 4)``."""
    return min(2.0 / alpha, 4.0)


@dataclass(frozen=True)
class TimePartition:
    """Levels ``t_n = T (n / N)**gamma``; ``gamma = 1`` is uniform."""

    T: float
    N: int
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigurationError("final time must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError("need at least one time step")
        if not self.gamma >= 1.0:
            raise ConfigurationError("grading exponent must be >= 1")

    @cached_property
    def breakpoints(self) -> np.ndarray:
        t = self.T * (np.arange(self.N + 1) / self.N) ** self.gamma
        t[0], t[-1] = 0.0, self.T
        t.setflags(write=False)
        return t

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def refined(self, factor: int = 2) -> TimePartition:
        return TimePartition(self.T, self.N * factor, self.gamma)


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    """Everything a solve needs apart from the source term.

    ``u0`` is vectorised in ``x``; ``u0_prime`` is required for the Ritz
    initial datum. ``init`` selects ``"l2"`` projection, ``"ritz"`` projection
    or ``"nodal"`` interpolation.
    """

    alpha: float
    partition: TimePartition
    space: FeSpace
    fields: CoefficientField
    u0: Callable
    degree: int = 1
    init: str = "l2"
    u0_prime: Callable | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.degree not in (0, 1):
            raise ConfigurationError("time degree must be 0 or 1")
        if self.init not in INITIAL_DATA:
            raise ConfigurationError(f"initial datum must be one of {INITIAL_DATA}")
        if self.init == "ritz" and self.u0_prime is None:
            raise ConfigurationError("Ritz initial datum needs u0_prime")

    def initial_vector(self) -> np.ndarray:
        if self.init == "l2":
            return l2_project(self.space, self.u0)
        if self.init == "ritz":
            return ritz_project(self.space, self.fields, self.u0, self.u0_prime)
        return np.asarray(self.u0(self.space.mesh.interior), dtype=float)

    @cached_property
    def stiffness(self) -> BandedOperator:
        return assemble_stiffness(self.space, self.fields)


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    """Finite element coefficient trajectory plus the initial datum ``U^0_-``."""

    trajectory: PiecewiseTrajectory
    initial: np.ndarray
    space: FeSpace
    alpha: float

    @property
    def breakpoints(self) -> np.ndarray:
        return self.trajectory.breakpoints

    @property
    def N(self) -> int:
        return self.trajectory.n_intervals

    def minus(self, n: int) -> np.ndarray:
        """``U^n_-`` for ``0 <= n <= N``; ``U^0_-`` is the initial datum."""
        return self.initial if n == 0 else self.trajectory.end_values[n - 1]

    def plus(self, n: int) -> np.ndarray:
        """``U^n_+`` for ``0 <= n < N``."""
        return self.trajectory.start_values[n]

    @cached_property
    def jumps(self) -> np.ndarray:
        """``[U]^n = U^n_+ - U^n_-`` for ``n = 0, ..., N - 1``."""
        ends = np.vstack([self.initial[None, :], self.trajectory.end_values[:-1]])
        return self.trajectory.start_values - ends

    def value_at(self, t: float) -> np.ndarray:
        """Left-continuous value; ``t = 0`` gives the initial datum."""
        if t == 0.0:
            return self.initial
        return self.trajectory(float(t), side="left")

    def l2_norm(self, c) -> float:
        return math.sqrt(max(self.space.mass.quad_form(c), 0.0))

    def max_norm(self) -> float:
        """Largest L2 norm over the initial datum and all one-sided limits."""
        vals = [self.l2_norm(self.initial)]
        vals += [self.l2_norm(v) for v in self.trajectory.start_values]
        vals += [self.l2_norm(v) for v in self.trajectory.end_values]
        return max(vals)


def _gauss_in_time(a: float, b: float, npts: int = 4) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, w = gauss_legendre(npts)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w, x


def memory_weight_tables(breakpoints: np.ndarray, alpha: float, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """``I^alpha`` and ``I^(alpha+1)`` of each local Legendre basis function.

    Entry ``[m, j, i]`` is the value at ``t_m`` of the fractional integral of
    ``P_i`` restricted to interval ``j`` (zero elsewhere).
    """
    t = np.asarray(breakpoints, dtype=float)
    a, b = t[:-1], t[1:]
    out = []
    for mu in (alpha, alpha + 1.0):
        W = monomial_weights(a[None, :], b[None, :], t[:, None], mu, degree)
        if degree == 1:
            out.append(W)
        else:
            out.append(W[..., :1])
    return out[0], out[1]


def dg_step_weights(FA: np.ndarray, FB: np.ndarray, steps: np.ndarray, n: int) -> np.ndarray:
    """Memory weights ``W[l, j, i]`` of step ``n`` (1-based) for ``j < n``.

    Row ``l`` tests with ``P_l``; the time integral of ``P_l d/dt I^alpha``
    is done by parts, leaving boundary values of ``I^alpha`` and an
    ``I^(alpha+1)`` increment for ``l = 1``.
    """
    q = FA.shape[2]
    W = np.empty((q, n, q))
    W[0] = FA[n, :n] - FA[n - 1, :n]
    if q == 2:
        W[1] = FA[n, :n] + FA[n - 1, :n] - (2.0 / steps[n - 1]) * (FB[n, :n] - FB[n - 1, :n])
    return W


_G = {1: np.array([[1.0]]), 2: np.array([[1.0, 1.0], [-1.0, 1.0]])}


def _block_matrix(small_m: np.ndarray, small_a: np.ndarray, mass: BandedOperator, stiff: BandedOperator):
    """``small_m (x) mass + small_a (x) stiff`` in node-major ordering."""
    Ms = sparse.diags([mass.lower, mass.diag, mass.upper], [-1, 0, 1])
    As = sparse.diags([stiff.lower, stiff.diag, stiff.upper], [-1, 0, 1])
    return (sparse.kron(Ms, small_m) + sparse.kron(As, small_a)).tocsc()


def source_moments(space: FeSpace, g: Callable, a: float, b: float, degree: int, npts: int = 4) -> np.ndarray:
    """``int_a^b P_l(tau) <g(t), phi_i> dt`` for ``l <= degree``; shape (degree+1, M)."""
    s, w, tau = _gauss_in_time(a, b, npts)
    out = np.zeros((degree + 1, space.dof))
    for sq, wq, xq in zip(s, w, tau):
        b_q = load_vector(space, lambda x, sq=sq: g(x, sq))
        out[0] += wq * b_q
        if degree == 1:
            out[1] += wq * xq * b_q
    return out


def dg_solve_diffusion(cfg: SchemeConfig, g: Callable | None = None) -> DiscreteSolution:
    """DG(0) or DG(1) time stepping for fractional diffusion without forcing vector.

    ``g(x, t)`` defaults to the source stored in ``cfg.fields``. The memory
    term uses exact fractional integrals of the local Legendre basis, so no
    time quadrature enters the left-hand side; the source is integrated by
    4-point Gauss in time.
    """
    if not cfg.fields.F_is_zero:
        raise ConfigurationError("DG time stepping requires a zero forcing vector")
    g = cfg.fields.g if g is None else g
    space = cfg.space
    Mdim, q = space.dof, cfg.degree + 1
    t = cfg.partition.breakpoints
    k = cfg.partition.steps
    N = t.size - 1
    mass, stiff = space.mass, cfg.stiffness
    FA, FB = memory_weight_tables(t, cfg.alpha, cfg.degree)
    u0 = cfg.initial_vector()
    U = np.zeros((N, q, Mdim))
    prev = u0
    P_minus = np.array([1.0, -1.0])[:q]
    uniform = np.allclose(k, k[0], rtol=1e-14, atol=0.0)
    factor = None
    for n in range(1, N + 1):
        W = dg_step_weights(FA, FB, k, n)
        rhs = source_moments(space, g, t[n - 1], t[n], cfg.degree)
        rhs += P_minus[:, None] * (mass @ prev)[None, :]
        if n > 1:
            hist = np.einsum("lji,jim->lm", W[:, : n - 1, :], U[: n - 1])
            rhs -= (stiff @ hist.T).T
        Wnn = W[:, n - 1, :]
        if q == 1:
            op = mass + float(Wnn[0, 0]) * stiff
            try:
                if factor is None or not uniform:
                    factor = op.cholesky()
                sol = linalg.cho_solve_banded((factor, False), rhs[0])
            except linalg.LinAlgError as exc:
                raise SolverError(f"step {n}: step matrix not positive definite (weight {Wnn[0, 0]:.3e})") from exc
            U[n - 1, 0] = sol
        else:
            if factor is None or not uniform:
                K = _block_matrix(_G[q], Wnn, mass, stiff)
                factor = sparse_linalg.splu(K)
            sol = factor.solve(rhs.T.reshape(-1))
            if not np.all(np.isfinite(sol)):
                raise SolverError(f"step {n}: non-finite solution, memory block {Wnn.tolist()}")
            U[n - 1] = sol.reshape(Mdim, q).T
        prev = U[n - 1].sum(axis=0)  # P_l(1) = 1
    traj = PiecewiseTrajectory(t, np.ascontiguousarray(U), np.full(N, cfg.degree))
    return DiscreteSolution(traj, u0, space, cfg.alpha)


def solve_general_F(cfg: SchemeConfig, g: Callable | None = None) -> DiscreteSolution:
    """First-order collocation of the time-integrated Galerkin equation.

    ``U`` is piecewise constant and the equation is enforced at every
    ``t_n``. The convection history ``int F' I^alpha U`` freezes ``F'`` at
    interval midpoints and integrates ``I^alpha U`` exactly through
    ``I^(alpha+1)`` increments.
    """
    g = cfg.fields.g if g is None else g
    space, fields = cfg.space, cfg.fields
    t = cfg.partition.breakpoints
    N = t.size - 1
    mass, stiff = space.mass, cfg.stiffness
    FA, FB = memory_weight_tables(t, cfg.alpha, 0)
    w, v = FA[..., 0], FB[..., 0]
    u0 = cfg.initial_vector()
    U = np.zeros((N, space.dof))
    has_F = not fields.F_is_zero
    moving = has_F and not fields.time_independent_F
    # running integral of the source, as a load vector
    G = np.zeros(space.dof)
    base = mass @ u0
    conv_hist = np.zeros(space.dof)  # sum_{m<n} C'_m [I^(a+1)U(t_m) - I^(a+1)U(t_{m-1})]
    Ib_prev = np.zeros(space.dof)  # I^(a+1)U(t_{n-1})
    C0 = assemble_convection(space, fields, 0.0) if has_F and not moving else None
    for n in range(1, N + 1):
        G = G + source_moments(space, g, t[n - 1], t[n], 0)[0]
        Ia_hist = w[n, : n - 1] @ U[: n - 1] if n > 1 else np.zeros(space.dof)
        op = mass + w[n, n - 1] * stiff
        rhs = base + G - stiff @ Ia_hist
        if has_F:
            Cn = assemble_convection(space, fields, t[n]) if moving else C0
            op = op - w[n, n - 1] * Cn
            rhs = rhs + Cn @ Ia_hist
            if moving:
                dC = assemble_convection(space, fields, 0.5 * (t[n - 1] + t[n]), derivative=True)
                Ib_hist = v[n, : n - 1] @ U[: n - 1] if n > 1 else np.zeros(space.dof)
                op = op + v[n, n - 1] * dC
                rhs = rhs - conv_hist - dC @ (Ib_hist - Ib_prev)
        try:
            sol = op.solve(rhs)
        except (linalg.LinAlgError, ValueError) as exc:
            raise SolverError(
                f"step {n} (t={t[n]:.4g}): singular step matrix; "
                f"|diffusion| {w[n, n - 1] * np.abs(stiff.diag).max():.3e}, "
                f"|mass| {np.abs(mass.diag).max():.3e}"
            ) from exc
        if not np.all(np.isfinite(sol)):
            raise SolverError(f"step {n} (t={t[n]:.4g}): non-finite solution")
        U[n - 1] = sol
        if moving:
            Ib_now = v[n, :n] @ U[:n]
            conv_hist = conv_hist + dC @ (Ib_now - Ib_prev)
            Ib_prev = Ib_now
    traj = PiecewiseTrajectory(t, U[:, None, :], np.zeros(N, dtype=int))
    return DiscreteSolution(traj, u0, space, cfg.alpha)


def modal_reference(
    x,
    alpha: float,
    kappa: float,
    modes: Sequence[tuple[int, float]],
    t: float,
    domain: tuple[float, float] = (0.0, 1.0),
    *,
    derivative: bool = False,
) -> np.ndarray:
    """``sum a_m E_alpha(-kappa (m pi / L)**2 t**alpha) sin(m pi (x - x_L) / L)``.

    ``modes`` lists ``(m, a_m)`` pairs. ``derivative=True`` returns the
    ``x``-derivative instead.
    """
    xl, xr = domain
    L = xr - xl
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for m, a_m in modes:
        lam = kappa * (m * math.pi / L) ** 2
        amp = a_m if t == 0 else a_m * mittag_leffler(alpha, -lam * t**alpha)
        arg = m * math.pi * (x - xl) / L
        out = out + (amp * (m * math.pi / L) * np.cos(arg) if derivative else amp * np.sin(arg))
    return out


def jump_and_boundary_accounting(U: DiscreteSolution) -> dict:
    """L2 norms of ``[U]^j`` (``j = 0..N-1``) and ``U^n_-`` (``n = 0..N``)."""
    return {
        "jumps": [U.l2_norm(j) for j in U.jumps],
        "end_values": [U.l2_norm(U.minus(n)) for n in range(U.N + 1)],
    }
