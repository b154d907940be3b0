"""Backward sweep: stage assembly, inertia correction, gains, value recursion."""

import numpy as np

from filterddp import Iterate, RegularizationOverflowError, SolverConfig
from filterddp.backward import (
    RegState,
    StageQ,
    ValueState,
    assemble_stage_q,
    backward_pass,
    inertia_correct,
    stage_gains,
    update_value,
)
from filterddp.ocp import StageDerivatives
from filterddp.benchmarks import build_eqlq, stacked_kkt_oracle
from filterddp.forward import rollout

from oracles import eig_inertia

CFG = SolverConfig()


def make_q(H, A, qu, con, B=None, con_x=None, qx=None, sigma=None):
    H = np.atleast_2d(np.asarray(H, dtype=float))
    A = np.asarray(A, dtype=float).reshape(H.shape[0], -1)
    n_u = H.shape[0]
    n_c = A.shape[1]
    n_x = 1 if qx is None else len(qx)
    return StageQ(
        qu=np.asarray(qu, dtype=float).reshape(n_u),
        qx=np.zeros(n_x) if qx is None else np.asarray(qx, dtype=float),
        qu_hat=np.asarray(qu, dtype=float).reshape(n_u),
        H=H,
        B=np.zeros((n_u, n_x)) if B is None else np.asarray(B, dtype=float),
        C=np.zeros((n_x, n_x)),
        A=A,
        con=np.asarray(con, dtype=float).reshape(n_c),
        con_x=np.zeros((n_c, n_x)) if con_x is None else np.asarray(con_x, dtype=float),
        sigma=np.zeros(n_u) if sigma is None else np.asarray(sigma, dtype=float),
        chi0=np.zeros(n_u),
    )


def scalar_stage_derivs(x, u, lin_dyn=True):
    """ell = (x^2 + u^2)/2, f = x + u, no constraints."""
    sd = StageDerivatives(
        ell=0.5 * (x * x + u * u),
        con=np.zeros(0),
        ell_x=np.array([x]), ell_u=np.array([u]),
        ell_xx=np.eye(1), ell_ux=np.zeros((1, 1)), ell_uu=np.eye(1),
        f_x=np.eye(1) if lin_dyn else None,
        f_u=np.eye(1) if lin_dyn else None,
        f_xx=None, f_ux=None, f_uu=None,
        con_x=np.zeros((0, 1)), con_u=np.zeros((0, 1)),
        L_x=np.array([x]), L_u=np.array([u]),
        L_xx=np.eye(1), L_ux=np.zeros((1, 1)), L_uu=np.eye(1),
    )
    return sd


def test_stage_q_scalar_lq():
    sd = scalar_stage_derivs(1.0, 1.0)
    nxt = ValueState(v_x=np.zeros(1), v_xx=np.eye(1), lam=np.zeros(1))
    q = assemble_stage_q(sd, nxt, np.array([False]))
    assert q.qu[0] == 1.0
    assert q.H[0, 0] == 2.0
    assert q.B[0, 0] == 1.0
    assert q.C[0, 0] == 2.0


def test_stage_q_terminal_boundary():
    sd = StageDerivatives(
        ell=4.5, con=np.zeros(0),
        ell_x=np.zeros(1), ell_u=np.array([3.0]),
        ell_xx=np.zeros((1, 1)), ell_ux=np.zeros((1, 1)), ell_uu=np.eye(1),
        f_x=None, f_u=None, f_xx=None, f_ux=None, f_uu=None,
        con_x=np.zeros((0, 1)), con_u=np.zeros((0, 1)),
        L_x=np.zeros(1), L_u=np.array([3.0]),
        L_xx=np.zeros((1, 1)), L_ux=np.zeros((1, 1)), L_uu=np.eye(1),
    )
    nxt = ValueState(v_x=np.full(1, 9.0), v_xx=np.full((1, 1), 9.0), lam=np.zeros(1))
    q = assemble_stage_q(sd, nxt, np.array([False]))
    assert q.qu[0] == 3.0
    assert q.H[0, 0] == 1.0
    assert q.B[0, 0] == 0.0
    assert q.C[0, 0] == 0.0


def test_stage_q_barrier_terms():
    sd = StageDerivatives(
        ell=0.0, con=np.zeros(0),
        ell_x=np.zeros(1), ell_u=np.zeros(1),
        ell_xx=np.zeros((1, 1)), ell_ux=np.zeros((1, 1)), ell_uu=np.zeros((1, 1)),
        f_x=None, f_u=None, f_xx=None, f_ux=None, f_uu=None,
        con_x=np.zeros((0, 1)), con_u=np.zeros((0, 1)),
        L_x=np.zeros(1), L_u=np.zeros(1),
        L_xx=np.zeros((1, 1)), L_ux=np.zeros((1, 1)), L_uu=np.zeros((1, 1)),
    )
    nxt = ValueState.boundary(1)
    q = assemble_stage_q(
        sd, nxt, np.array([True]), mu=1.0,
        u_bar=np.array([2.0]), z_bar=np.array([0.5]),
    )
    assert q.qu_hat[0] == -0.5
    assert q.sigma[0] == 0.25


def test_gains_hand_solved_saddle():
    # K = [[1,1],[1,0]], rhs -(1, 0): alpha = 0, psi = -1
    q = make_q(H=1.0, A=[[1.0]], qu=[1.0], con=[0.0])
    factor, _ = __import__("filterddp.backward", fromlist=["factor_stage"]).factor_stage(
        q, 0.0, CFG
    )
    g = stage_gains(q, factor)
    assert abs(g.alpha[0]) < 1e-14
    assert abs(g.psi[0] + 1.0) < 1e-14
    assert np.all(g.beta == 0.0)
    assert np.all(g.omega == 0.0)


def test_gains_zero_rhs_is_fixed_point():
    from filterddp.backward import factor_stage

    q = make_q(H=1.0, A=[[1.0]], qu=[0.0], con=[0.0])
    factor, _ = factor_stage(q, 0.0, CFG)
    g = stage_gains(q, factor)
    for field in (g.alpha, g.beta, g.psi, g.omega, g.chi, g.zeta):
        assert np.all(field == 0.0)


def test_gains_unconstrained_newton_step():
    from filterddp.backward import factor_stage

    q = make_q(H=2.0, A=np.zeros((1, 0)), qu=[4.0], con=[], B=[[1.0]])
    factor, _ = factor_stage(q, 0.0, CFG)
    g = stage_gains(q, factor)
    assert abs(g.alpha[0] + 2.0) < 1e-14
    assert abs(g.beta[0, 0] + 0.5) < 1e-14


def test_inertia_accepts_definite_system_unshifted():
    q = make_q(H=1.0, A=[[1.0]], qu=[0.0], con=[0.0])
    factor, reg = inertia_correct(q, RegState(), CFG)
    assert factor.inertia == (1, 1, 0)
    assert reg.delta_w == 0.0
    assert reg.delta_c == 0.0


def test_inertia_escalation_schedule():
    # -1 + delta_w > 0 first holds at 1e-4 * 8^5
    q = make_q(H=-1.0, A=np.zeros((1, 0)), qu=[0.0], con=[])
    factor, reg = inertia_correct(q, RegState(), CFG)
    assert factor.inertia == (1, 0, 0)
    assert abs(reg.delta_w - 1e-4 * 8**5) < 1e-12
    assert reg.delta_w_last == reg.delta_w


def test_inertia_warm_start_from_last_success():
    q = make_q(H=-0.05, A=np.zeros((1, 0)), qu=[0.0], con=[])
    factor, reg = inertia_correct(q, RegState(delta_w_last=0.3), CFG)
    assert factor.inertia == (1, 0, 0)
    assert abs(reg.delta_w - 0.1) < 1e-15


def test_inertia_rank_deficient_constraint_row():
    q = make_q(H=0.0, A=[[0.0]], qu=[0.0], con=[0.0])
    factor, reg = inertia_correct(q, RegState(), CFG)
    assert factor.inertia == (1, 1, 0)
    assert reg.delta_c > 0.0
    assert reg.delta_w > 0.0


def test_inertia_overflow():
    q = make_q(H=-1e41, A=np.zeros((1, 0)), qu=[0.0], con=[])
    try:
        inertia_correct(q, RegState(), CFG)
    except RegularizationOverflowError:
        return
    assert False, "expected RegularizationOverflowError"


def test_corrected_inertia_matches_eigenvalue_oracle():
    # randomized stage systems, deficiency injected as exact zero or
    # duplicated columns of A
    rng = np.random.default_rng(2024)
    for trial in range(100):
        n_u = int(rng.integers(1, 6))
        n_c = int(rng.integers(0, n_u + 1))
        W = rng.standard_normal((n_u, n_u))
        H = 0.5 * (W + W.T) - float(rng.uniform(0.0, 2.0)) * np.eye(n_u)
        A = rng.standard_normal((n_u, n_c))
        if n_c and trial % 3 == 0:
            A[:, rng.integers(n_c)] = 0.0
        if n_c >= 2 and trial % 5 == 0:
            A[:, 1] = A[:, 0]
        q = make_q(H=H, A=A, qu=np.zeros(n_u), con=np.zeros(n_c))
        factor, reg = inertia_correct(q, RegState(), CFG)
        assert factor.inertia == (n_u, n_c, 0)
        K = np.zeros((n_u + n_c, n_u + n_c))
        K[:n_u, :n_u] = H + reg.delta_w * np.eye(n_u)
        K[:n_u, n_u:] = A
        K[n_u:, :n_u] = A.T
        K[n_u:, n_u:] = -reg.delta_c * np.eye(n_c)
        assert eig_inertia(K) == (n_u, n_c, 0)


# -- value recursion --------------------------------------------------------

def test_value_zero_gains():
    q = make_q(H=1.0, A=np.zeros((1, 0)), qu=[0.0], con=[], qx=[1.5])
    g = stage_gains_zero(1, 0, 1)
    sd = scalar_stage_derivs(0.0, 0.0, lin_dyn=False)
    out = update_value(q, g, sd, ValueState.boundary(1))
    assert out.v_x[0] == 1.5
    assert np.all(out.v_xx == q.C)


def stage_gains_zero(n_u, n_c, n_x):
    from filterddp.backward import StageGains

    return StageGains(
        alpha=np.zeros(n_u), beta=np.zeros((n_u, n_x)),
        psi=np.zeros(n_c), omega=np.zeros((n_c, n_x)),
        chi=np.zeros(n_u), zeta=np.zeros((n_u, n_x)),
    )


def test_value_scalar_hand_case():
    from filterddp.backward import StageGains

    q = StageQ(
        qu=np.array([2.0]), qx=np.array([1.0]), qu_hat=np.array([2.0]),
        H=np.array([[2.0]]), B=np.array([[1.0]]), C=np.array([[2.0]]),
        A=np.zeros((1, 0)), con=np.zeros(0), con_x=np.zeros((0, 1)),
        sigma=np.zeros(1), chi0=np.zeros(1),
    )
    g = StageGains(
        alpha=np.array([-1.0]), beta=np.array([[-0.5]]),
        psi=np.zeros(0), omega=np.zeros((0, 1)),
        chi=np.zeros(1), zeta=np.zeros((1, 1)),
    )
    sd = scalar_stage_derivs(0.0, 0.0, lin_dyn=False)
    out = update_value(q, g, sd, ValueState.boundary(1))
    assert abs(out.v_x[0]) < 1e-15
    assert abs(out.v_xx[0, 0] - 1.5) < 1e-15


def test_value_quadratic_term_includes_shift():
    from filterddp.backward import StageGains

    q = StageQ(
        qu=np.array([0.0]), qx=np.array([0.0]), qu_hat=np.array([0.0]),
        H=np.array([[2.0]]), B=np.array([[1.0]]), C=np.array([[0.0]]),
        A=np.zeros((1, 0)), con=np.zeros(0), con_x=np.zeros((0, 1)),
        sigma=np.zeros(1), chi0=np.zeros(1),
    )
    g = StageGains(
        alpha=np.zeros(1), beta=np.array([[-0.25]]),
        psi=np.zeros(0), omega=np.zeros((0, 1)),
        chi=np.zeros(1), zeta=np.zeros((1, 1)),
    )
    sd = scalar_stage_derivs(0.0, 0.0, lin_dyn=False)
    plain = update_value(q, g, sd, ValueState.boundary(1), delta_w=0.0)
    shifted = update_value(q, g, sd, ValueState.boundary(1), delta_w=8.0)
    # beta' (H + delta) beta grows by delta * beta^2 = 8 / 16
    assert abs((shifted.v_xx - plain.v_xx)[0, 0] - 0.5) < 1e-15


# -- full sweeps ------------------------------------------------------------

def oracle_iterate(model):
    sol = stacked_kkt_oracle(model)
    return Iterate(
        x=sol.x.copy(), u=sol.u.copy(), phi=sol.phi.copy(),
        lam=np.zeros_like(sol.x), z=np.zeros_like(sol.u),
        theta=0.0, lagrangian=0.0,
    )


def zero_start(model):
    d = model.dims
    from filterddp.ocp import evaluate_lagrangian, evaluate_theta, simulate

    u = np.zeros((d.horizon, d.n_u))
    x = simulate(model, u)
    return Iterate(
        x=x, u=u, phi=np.zeros((d.horizon, d.n_c)),
        lam=np.zeros((d.horizon, d.n_x)), z=np.zeros((d.horizon, d.n_u)),
        theta=evaluate_theta(model, x, u),
        lagrangian=evaluate_lagrangian(model, x, u, np.zeros((d.horizon, d.n_c))),
    )


def test_sweep_reproduces_stacked_newton_step():
    for seed in range(5):
        m = build_eqlq(seed=seed)
        sol = stacked_kkt_oracle(m)
        it = zero_start(m)
        gains, msweep, _ = backward_pass(m, it, RegState(), CFG)
        assert np.all(gains.delta_w == 0.0)
        trial = rollout(m, it, gains, 1.0)
        assert trial.finite
        assert np.max(np.abs(trial.iterate.x - sol.x)) < 1e-8
        assert np.max(np.abs(trial.iterate.u - sol.u)) < 1e-8
        assert np.max(np.abs(trial.iterate.phi - sol.phi)) < 1e-8


def test_sweep_fixed_point_at_kkt():
    m = build_eqlq(seed=12)
    it = oracle_iterate(m)
    gains, m_pred, _ = backward_pass(m, it, RegState(), CFG)
    assert np.max(np.abs(gains.alpha)) < 1e-10
    assert np.max(np.abs(gains.psi)) < 1e-10
    assert abs(m_pred) < 1e-18


def test_sweep_multiplier_recursion_matches_oracle():
    m = build_eqlq(seed=12)
    sol = stacked_kkt_oracle(m)
    it = oracle_iterate(m)
    backward_pass(m, it, RegState(), CFG)
    assert np.max(np.abs(it.lam - sol.lam)) < 1e-8


def test_sweep_shares_one_shift_across_stages():
    # concave stage cost everywhere: every stage needs the same correction
    from filterddp.ocp import OcpModel, Dims

    m = OcpModel(
        dims=Dims(horizon=4, n_x=1, n_u=1, n_c=0),
        x_init=np.zeros(1),
        cost=lambda x, u: -0.5 * float(u @ u),
        cost_x=lambda x, u: np.zeros(1),
        cost_u=lambda x, u: -u,
        cost_xx=lambda x, u: np.zeros((1, 1)),
        cost_ux=lambda x, u: np.zeros((1, 1)),
        cost_uu=lambda x, u: -np.eye(1),
        dynamics=lambda x, u: x + u,
        dynamics_x=lambda x, u: np.eye(1),
        dynamics_u=lambda x, u: np.eye(1),
    )
    it = zero_start(m)
    gains, _, reg = backward_pass(m, it, RegState(), CFG)
    assert np.all(gains.delta_w == gains.delta_w[0])
    assert gains.delta_w[0] > 1.0
    assert reg.delta_w_last == gains.delta_w[0]


def test_gauss_newton_drops_dynamics_curvature():
    sd = StageDerivatives(
        ell=0.0, con=np.zeros(0),
        ell_x=np.zeros(1), ell_u=np.zeros(1),
        ell_xx=np.eye(1), ell_ux=np.zeros((1, 1)), ell_uu=np.eye(1),
        f_x=np.eye(1), f_u=np.eye(1),
        f_xx=np.full((1, 1, 1), 2.0), f_ux=np.full((1, 1, 1), 2.0),
        f_uu=np.full((1, 1, 1), 2.0),
        con_x=np.zeros((0, 1)), con_u=np.zeros((0, 1)),
        L_x=np.zeros(1), L_u=np.zeros(1),
        L_xx=np.eye(1), L_ux=np.zeros((1, 1)), L_uu=np.eye(1),
    )
    nxt = ValueState(v_x=np.zeros(1), v_xx=np.zeros((1, 1)), lam=np.ones(1))
    full = assemble_stage_q(sd, nxt, np.array([False]), gauss_newton=False)
    gn = assemble_stage_q(sd, nxt, np.array([False]), gauss_newton=True)
    assert full.H[0, 0] == 3.0
    assert gn.H[0, 0] == 1.0
