import math

import numpy as np
import pytest
from scipy import special

from fracfp import timestep
from fracfp.fem1d import CoefficientField, ConfigurationError, FeSpace, Mesh1D
from fracfp.timestep import (
    SchemeConfig,
    SolverError,
    TimePartition,
    default_grading,
    dg_solve_diffusion,
    jump_and_boundary_accounting,
    memory_weight_tables,
    modal_reference,
    solve_general_F,
)

SIN = lambda x: np.sin(math.pi * x)
DSIN = lambda x: math.pi * np.cos(math.pi * x)
ZERO = lambda x, t=0.0: np.zeros(np.shape(x))


def make_cfg(alpha=0.5, M=15, N=16, T=1.0, gamma=1.0, degree=1, u0=SIN, fields=None, **kw):
    space = FeSpace(Mesh1D.uniform(0.0, 1.0, M))
    return SchemeConfig(alpha, TimePartition(T, N, gamma), space, fields or CoefficientField(), u0, degree, **kw)


def dense_fe(M):
    """Independent uniform-mesh P1 matrices and the exact load of sin(pi x)."""
    h = 1.0 / (M + 1)
    e = np.ones(M - 1)
    mass = h / 6 * (4 * np.eye(M) + np.diag(e, 1) + np.diag(e, -1))
    stiff = (2 * np.eye(M) - np.diag(e, 1) - np.diag(e, -1)) / h
    x = h * np.arange(1, M + 1)
    sin_load = np.sin(math.pi * x) * (2 - 2 * math.cos(math.pi * h)) / (math.pi**2 * h)
    return mass, stiff, sin_load


class TestPartition:
    def test_uniform_and_graded(self):
        np.testing.assert_allclose(TimePartition(2.0, 4).breakpoints, [0, 0.5, 1, 1.5, 2])
        g = TimePartition(1.0, 4, 2.0).breakpoints
        np.testing.assert_allclose(g, [0, 1 / 16, 1 / 4, 9 / 16, 1])
        assert TimePartition(1.0, 4).refined().N == 8

    @pytest.mark.parametrize("args", [(0.0, 4), (1.0, 0), (1.0, 4, 0.5), (math.inf, 4)])
    def test_invalid(self, args):
        with pytest.raises(ConfigurationError):
            TimePartition(*args)

    def test_default_grading(self):
        assert default_grading(0.5) == 4.0
        assert default_grading(1.0) == 2.0
        assert default_grading(0.8) == pytest.approx(2.5)
        assert default_grading(0.1) == 4.0


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"alpha": 0.0}, {"alpha": 1.5}, {"degree": 2}, {"init": "spline"}, {"init": "ritz"}]
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            make_cfg(**kw)

    def test_initial_data_choices(self):
        nodal = make_cfg(init="nodal").initial_vector()
        np.testing.assert_allclose(nodal, SIN(np.arange(1, 16) / 16))
        ritz = make_cfg(init="ritz", u0_prime=DSIN).initial_vector()
        l2 = make_cfg().initial_vector()
        assert np.max(np.abs(ritz - l2)) < 1e-2

    def test_dg_rejects_forcing(self):
        cfg = make_cfg(fields=CoefficientField(F=lambda x, t=0.0: np.ones_like(x)))
        with pytest.raises(ConfigurationError):
            dg_solve_diffusion(cfg)


def test_memory_weight_tables_closed_form():
    t = TimePartition(1.0, 5, 2.0).breakpoints
    for alpha in (0.3, 1.0):
        FA, FB = memory_weight_tables(t, alpha, 0)
        for m in range(6):
            for j in range(5):
                a, b = t[j], t[j + 1]
                for mu, table in ((alpha, FA), (alpha + 1, FB)):
                    ref = (max(t[m] - a, 0) ** mu - max(t[m] - b, 0) ** mu) / math.gamma(mu + 1)
                    assert table[m, j, 0] == pytest.approx(ref, rel=1e-13, abs=1e-16)


def test_backward_euler_equivalence():
    M, N, T = 15, 16, 0.8
    cfg = make_cfg(alpha=1.0, M=M, N=N, T=T, degree=0)
    g = lambda x, t: t * np.sin(math.pi * x)
    U = dg_solve_diffusion(cfg, g)
    mass, stiff, load = dense_fe(M)
    k = T / N
    u = cfg.initial_vector()
    for n in range(1, N + 1):
        a, b = (n - 1) * k, n * k
        u = np.linalg.solve(mass + k * stiff, mass @ u + 0.5 * (b * b - a * a) * load)
        np.testing.assert_allclose(U.minus(n), u, rtol=0, atol=1e-12)


def test_dg1_reproduces_classical_heat_stepper():
    M, N, T = 11, 10, 0.5
    cfg = make_cfg(alpha=1.0, M=M, N=N, T=T, gamma=1.5, degree=1)
    g = lambda x, t: t * np.sin(math.pi * x)
    U = dg_solve_diffusion(cfg, g)
    mass, stiff, load = dense_fe(M)
    t = cfg.partition.breakpoints
    prev = cfg.initial_vector()
    for n in range(1, N + 1):
        a, k = t[n - 1], t[n] - t[n - 1]
        # nodal basis psi0 = (t_n - t)/k, psi1 = (t - t_{n-1})/k
        K = np.block([
            [mass / 2 + k / 3 * stiff, mass / 2 + k / 6 * stiff],
            [-mass / 2 + k / 6 * stiff, mass / 2 + k / 3 * stiff],
        ])
        f0 = k * (3 * a + k) / 6 * load
        f1 = k * (a / 2 + k / 3) * load
        X = np.linalg.solve(K, np.concatenate([mass @ prev + f0, f1]))
        X0, X1 = X[:M], X[M:]
        np.testing.assert_allclose(U.plus(n - 1), X0, atol=1e-10)
        np.testing.assert_allclose(U.minus(n), X1, atol=1e-10)
        prev = X1


@pytest.mark.parametrize("degree", [0, 1])
def test_zero_data_gives_zero_solution(degree):
    zero = lambda x: np.zeros_like(x)
    U = dg_solve_diffusion(make_cfg(u0=zero, degree=degree), ZERO)
    assert np.all(U.trajectory.coeffs == 0.0)
    V = solve_general_F(make_cfg(u0=zero, degree=0, fields=CoefficientField(F=lambda x, t=0.0: 1 + t + 0 * x, dF=lambda x, t=0.0: np.ones_like(x))), ZERO)
    assert np.all(V.trajectory.coeffs == 0.0)


@pytest.mark.parametrize("solver", ["dg", "general"])
def test_linearity(solver):
    u1, u2 = SIN, lambda x: x * (1 - x) * np.exp(x)
    g1 = lambda x, t: np.cos(t) * x * (1 - x)
    g2 = lambda x, t: t**2 * np.sin(2 * math.pi * x)
    fields = None
    if solver == "general":
        fields = CoefficientField(F=lambda x, t=0.0: np.sin(math.pi * x) * (1 + t), dF=lambda x, t=0.0: np.sin(math.pi * x))
    run = dg_solve_diffusion if solver == "dg" else solve_general_F
    deg = 1 if solver == "dg" else 0
    a = run(make_cfg(u0=u1, degree=deg, fields=fields), g1).trajectory.coeffs
    b = run(make_cfg(u0=u2, degree=deg, fields=fields), g2).trajectory.coeffs
    both = run(make_cfg(u0=lambda x: u1(x) + u2(x), degree=deg, fields=fields), lambda x, t: g1(x, t) + g2(x, t))
    np.testing.assert_allclose(both.trajectory.coeffs, a + b, atol=1e-12 * np.max(np.abs(a + b)))


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0])
def test_homogeneous_dg_is_contractive(alpha):
    U = dg_solve_diffusion(make_cfg(alpha=alpha, N=24, gamma=default_grading(alpha)), ZERO)
    acc = jump_and_boundary_accounting(U)
    assert max(acc["end_values"][1:]) <= acc["end_values"][0] * (1 + 1e-12)


def test_modal_reference_examples():
    x = np.linspace(0, 1, 9)
    np.testing.assert_array_equal(modal_reference(x, 0.5, 1.0, [(1, 1.0)], 0.0), SIN(x))
    heat = modal_reference(x, 1.0, 2.0, [(1, 1.0), (3, 0.5)], 0.1)
    ref = math.exp(-2 * math.pi**2 * 0.1) * SIN(x) + 0.5 * math.exp(-2 * 9 * math.pi**2 * 0.1) * np.sin(3 * math.pi * x)
    np.testing.assert_allclose(heat, ref, rtol=1e-14, atol=1e-16)
    # E_{1/2}(-z) = erfcx(z)
    amp = modal_reference(np.array([0.5]), 0.5, 1.0, [(1, 1.0)], 1.0)[0]
    assert amp == pytest.approx(special.erfcx(math.pi**2), rel=1e-12)


def test_modal_reference_derivative_and_domain():
    x = np.array([1.25, 1.5])
    d = modal_reference(x, 1.0, 1.0, [(1, 1.0)], 0.0, (1.0, 2.0), derivative=True)
    np.testing.assert_allclose(d, math.pi * np.cos(math.pi * (x - 1.0)), atol=1e-15)


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_modal_error_decreases_under_refinement(alpha):
    errs = []
    for M, N in ((7, 8), (15, 16), (31, 32)):
        cfg = make_cfg(alpha=alpha, M=M, N=N, T=0.5, gamma=default_grading(alpha))
        U = dg_solve_diffusion(cfg)
        x = cfg.space.mesh.interior
        errs.append(np.max(np.abs(U.value_at(0.5) - modal_reference(x, alpha, 1.0, [(1, 1.0)], 0.5))))
    assert errs[0] > errs[1] > errs[2]


def test_jump_accounting():
    U = dg_solve_diffusion(make_cfg(degree=0, N=6), ZERO)
    c = U.trajectory.coeffs[:, 0, :]
    np.testing.assert_array_equal(U.jumps[1:], c[1:] - c[:-1])
    np.testing.assert_array_equal(U.jumps[0], c[0] - U.initial)
    one = jump_and_boundary_accounting(dg_solve_diffusion(make_cfg(N=1), ZERO))
    assert len(one["jumps"]) == 1 and len(one["end_values"]) == 2


def test_jumps_vanish_in_smooth_limit():
    worst = []
    for N in (8, 32, 128):
        U = dg_solve_diffusion(make_cfg(alpha=1.0, M=15, N=N, T=0.5), ZERO)
        worst.append(max(jump_and_boundary_accounting(U)["jumps"][1:]))
    assert worst[0] > worst[1] > worst[2]
    assert worst[2] < worst[1] / 10


def test_general_scheme_matches_dg0_without_forcing():
    for alpha in (0.4, 1.0):
        cfg = make_cfg(alpha=alpha, degree=0, N=20, gamma=2.0)
        g = lambda x, t: (1 + t) * x * (1 - x)
        a = solve_general_F(cfg, g).trajectory.coeffs
        b = dg_solve_diffusion(cfg, g).trajectory.coeffs
        assert np.max(np.abs(a - b)) <= 1e-8


def test_general_scheme_first_order_for_classical_equation():
    # successive differences U_N - U_2N shrink at the temporal order
    fields = CoefficientField(F=lambda x, t=0.0: np.full(np.shape(x), 2.0))
    sols = {N: solve_general_F(make_cfg(alpha=1.0, M=31, N=N, degree=0, fields=fields)) for N in (128, 256, 512, 1024)}
    diffs = [sols[N].l2_norm(sols[N].minus(N) - sols[2 * N].minus(2 * N)) for N in (128, 256, 512)]
    rates = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    assert np.all(np.abs(rates - 1.0) < 0.2)


@pytest.mark.parametrize("solver", [dg_solve_diffusion, solve_general_F])
def test_singular_step_reports_diagnostics(monkeypatch, solver):
    cfg = make_cfg(M=1, N=3, degree=0)
    # a memory weight that cancels the single-node mass exactly
    w = -cfg.space.mass.diag[0] / cfg.stiffness.diag[0]

    def broken(*args, **kw):
        FA, FB = memory_weight_tables(*args, **kw)
        past = np.arange(FA.shape[0])[:, None] > np.arange(FA.shape[1])[None, :]
        return w * past[..., None] * np.ones_like(FA), FB

    monkeypatch.setattr(timestep, "memory_weight_tables", broken)
    with pytest.raises(SolverError, match="step 1"):
        solver(cfg)
