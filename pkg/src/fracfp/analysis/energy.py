"""Discrete energy balance of the DG time stepper."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ..fem1d import poincare_constant
from ..fracops import composite_gauss, frac_integral_eval
from ..timestep import DiscreteSolution, SchemeConfig, dg_step_weights, memory_weight_tables
from .constants import psi
from .stability import source_norm

ENERGY_TOL = 1e-8
MEMORY_TOL = 1e-9


@dataclass
class EnergyLedger:
    """Per-level terms of the energy inequality, indexed by ``n = 1..N``.

    ``memory`` comes from the assembled step weights and ``memory_check``
    from fractional integrals of the solution trajectory; they should agree
    to rounding.
    """

    times: np.ndarray
    end_sq: np.ndarray
    jump_sum: np.ndarray
    memory: np.ndarray
    memory_check: np.ndarray
    source_sq: np.ndarray
    rhs: np.ndarray
    initial_sq: float
    constant: float

    @property
    def lhs(self) -> np.ndarray:
        return self.end_sq + self.jump_sum + self.memory

    @property
    def slack(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def scale(self) -> float:
        return max(1e-300, float(np.max(np.abs(np.concatenate([self.rhs, self.lhs, self.memory])))), self.initial_sq)

    @property
    def worst_slack(self) -> float:
        return float(self.slack.min())

    @property
    def memory_discrepancy(self) -> float:
        return float(np.max(np.abs(self.memory - self.memory_check)))

    @property
    def passed(self) -> bool:
        s = self.scale
        return (
            self.worst_slack >= -ENERGY_TOL * s
            and float(self.memory.min()) >= -MEMORY_TOL * s
            and self.memory_discrepancy <= MEMORY_TOL * s
        )

    def rows(self) -> list[dict]:
        return [
            {
                "n": n + 1,
                "t": float(self.times[n]),
                "end_sq": float(self.end_sq[n]),
                "jump_sum": float(self.jump_sum[n]),
                "memory": float(self.memory[n]),
                "rhs": float(self.rhs[n]),
                "slack": float(self.slack[n]),
            }
            for n in range(self.times.size)
        ]


def _memory_from_weights(U: DiscreteSolution, cfg: SchemeConfig) -> np.ndarray:
    """Per-interval memory contributions tested with ``X = U``."""
    C = U.trajectory.coeffs  # (N, q, M)
    q = C.shape[1]
    t = U.breakpoints
    FA, FB = memory_weight_tables(t, cfg.alpha, q - 1)
    k = np.diff(t)
    stiff = cfg.stiffness
    out = np.empty(U.N)
    for n in range(1, U.N + 1):
        W = dg_step_weights(FA, FB, k, n)
        Y = np.einsum("lji,jim->lm", W, C[:n])
        out[n - 1] = sum(float(C[n - 1, l] @ (stiff @ Y[l])) for l in range(q))
    return out


def _memory_from_trajectory(U: DiscreteSolution, cfg: SchemeConfig) -> np.ndarray:
    """Same contributions from ``I^alpha U`` and ``I^(alpha+1) U`` at the levels."""
    traj = U.trajectory
    t = U.breakpoints
    stiff = cfg.stiffness
    Ia = frac_integral_eval(traj, cfg.alpha, t)
    Ib = frac_integral_eval(traj, cfg.alpha + 1.0, t)
    deriv = traj.derivative()
    out = np.empty(U.N)
    for n in range(1, U.N + 1):
        dU = deriv.coeffs[n - 1, 0]  # constant on the interval for degree <= 1
        val = float(Ia[n] @ (stiff @ U.minus(n))) - float(Ia[n - 1] @ (stiff @ U.plus(n - 1)))
        val -= float((Ib[n] - Ib[n - 1]) @ (stiff @ dU))
        out[n - 1] = val
    return out


def energy_check(U: DiscreteSolution, cfg: SchemeConfig, g: Callable | None = None) -> EnergyLedger:
    """Evaluate both sides of the DG energy inequality at every level."""
    if U.trajectory.degree > 1:
        raise ValueError("energy check supports degree <= 1 in time")
    g = cfg.fields.g if g is None else g
    t = U.breakpoints
    space = cfg.space
    end_sq = np.array([U.l2_norm(U.minus(n)) ** 2 for n in range(1, U.N + 1)])
    jumps_sq = np.array([U.l2_norm(j) ** 2 for j in U.jumps])
    # sum over j = 1..n-1
    jump_sum = np.concatenate(([0.0], np.cumsum(jumps_sq[1:])))
    mem = np.cumsum(_memory_from_weights(U, cfg))
    mem_check = np.cumsum(_memory_from_trajectory(U, cfg))
    s, w = composite_gauss(t, t[-1], 4)
    gsq = np.array([source_norm(space, g, si) ** 2 for si in s]) * w
    source_sq = np.cumsum(gsq.reshape(U.N, -1).sum(axis=1))
    C_omega = poincare_constant(space.mesh.x_left, space.mesh.x_right)
    constant = C_omega * psi(cfg.alpha) / cfg.fields.kappa_min
    initial_sq = U.l2_norm(U.initial) ** 2
    rhs = initial_sq + constant / t[1:] ** (1.0 - cfg.alpha) * source_sq
    return EnergyLedger(t[1:].copy(), end_sq, jump_sum, mem, mem_check, source_sq, rhs, initial_sq, constant)


def norm_decay_holds(ledger: EnergyLedger, tol: float = 1e-8) -> bool:
    """``||U^n_-|| <= ||u0X|| (1 + tol)`` at every level."""
    return bool(np.all(np.sqrt(ledger.end_sq) <= math.sqrt(ledger.initial_sq) * (1.0 + tol)))
