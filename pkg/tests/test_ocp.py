"""Problem container: merit evaluations, residuals, derivative checking."""

import numpy as np

from filterddp import (
    Dims,
    Iterate,
    OcpModel,
    derivative_check,
    evaluate_cost,
    evaluate_lagrangian,
    evaluate_theta,
    kkt_residuals,
    optimality_error,
    simulate,
)
from filterddp.benchmarks import build_eqlq, stacked_kkt_oracle

from oracles import resum_lagrangian, resum_theta

Z2 = np.zeros((2, 2))


def chain_model(horizon, n_x, n_u, n_c, **kw):
    """Identity-dynamics model with pluggable cost/constraint callbacks."""
    base = dict(
        dims=Dims(horizon=horizon, n_x=n_x, n_u=n_u, n_c=n_c),
        x_init=np.zeros(n_x),
        cost=lambda x, u: 0.0,
        cost_x=lambda x, u: np.zeros(n_x),
        cost_u=lambda x, u: np.zeros(n_u),
        cost_xx=lambda x, u: np.zeros((n_x, n_x)),
        cost_ux=lambda x, u: np.zeros((n_u, n_x)),
        cost_uu=lambda x, u: np.zeros((n_u, n_u)),
    )
    if horizon > 1:
        base.update(
            dynamics=lambda x, u: x,
            dynamics_x=lambda x, u: np.eye(n_x),
            dynamics_u=lambda x, u: np.zeros((n_x, n_u)),
        )
    base.update(kw)
    return OcpModel(**base)


def test_theta_feasible_point_is_zero():
    m = chain_model(
        3, 1, 1, 1,
        constraints=lambda x, u: u - u,
        con_x=lambda x, u: np.zeros((1, 1)),
        con_u=lambda x, u: np.eye(1),
    )
    x = np.zeros((3, 1))
    u = np.zeros((3, 1))
    assert evaluate_theta(m, x, u) == 0.0


def test_theta_sums_absolute_values():
    # stage values (1, -2) then (0.5, 0) give 3.5
    m = chain_model(
        2, 1, 2, 2,
        constraints=lambda x, u: u,
        con_x=lambda x, u: np.zeros((2, 1)),
        con_u=lambda x, u: np.eye(2),
    )
    x = np.zeros((2, 1))
    u = np.array([[1.0, -2.0], [0.5, 0.0]])
    assert evaluate_theta(m, x, u) == 3.5


def test_theta_matches_resummation():
    rng = np.random.default_rng(0)
    m = build_eqlq(seed=4)
    d = m.dims
    for _ in range(10):
        x = rng.standard_normal((d.horizon, d.n_x))
        u = rng.standard_normal((d.horizon, d.n_u))
        assert abs(evaluate_theta(m, x, u) - resum_theta(m, x, u)) < 1e-14


def test_lagrangian_zero_multipliers_is_cost():
    m = build_eqlq(seed=1)
    d = m.dims
    rng = np.random.default_rng(1)
    x = rng.standard_normal((d.horizon, d.n_x))
    u = rng.standard_normal((d.horizon, d.n_u))
    phi0 = np.zeros((d.horizon, d.n_c))
    assert evaluate_lagrangian(m, x, u, phi0) == evaluate_cost(m, x, u)


def test_lagrangian_accumulates_phi_c():
    m = chain_model(
        3, 1, 1, 1,
        constraints=lambda x, u: np.array([2.0]),
        con_x=lambda x, u: np.zeros((1, 1)),
        con_u=lambda x, u: np.zeros((1, 1)),
    )
    x = np.zeros((3, 1))
    u = np.zeros((3, 1))
    phi = np.ones((3, 1))
    assert evaluate_lagrangian(m, x, u, phi) == 6.0


def test_lagrangian_unit_masked_control():
    m = chain_model(1, 1, 1, 0, nonneg_mask=np.array([True]))
    val = evaluate_lagrangian(m, np.zeros((1, 1)), np.ones((1, 1)),
                              np.zeros((1, 0)), mu=1.0)
    assert val == 0.0


def test_lagrangian_matches_resummation_with_barrier():
    rng = np.random.default_rng(2)
    m = chain_model(
        4, 2, 3, 1,
        cost=lambda x, u: float(x @ x + u @ u),
        cost_x=lambda x, u: 2 * x,
        cost_u=lambda x, u: 2 * u,
        cost_xx=lambda x, u: 2 * np.eye(2),
        cost_ux=lambda x, u: np.zeros((3, 2)),
        cost_uu=lambda x, u: 2 * np.eye(3),
        constraints=lambda x, u: np.array([x[0] * u[1] - 1.0]),
        con_x=lambda x, u: np.array([[u[1], 0.0]]),
        con_u=lambda x, u: np.array([[0.0, x[0], 0.0]]),
        nonneg_mask=np.array([False, True, True]),
    )
    for _ in range(10):
        x = rng.standard_normal((4, 2))
        u = 0.5 + rng.uniform(0.1, 1.0, size=(4, 3))
        phi = rng.standard_normal((4, 1))
        mu = float(rng.uniform(0.01, 1.0))
        got = evaluate_lagrangian(m, x, u, phi, mu=mu)
        want = resum_lagrangian(m, x, u, phi, mu=mu)
        assert abs(got - want) < 1e-12 * max(1.0, abs(want))


def test_simulate_follows_dynamics():
    m = build_eqlq(seed=2)
    d = m.dims
    u = np.random.default_rng(3).standard_normal((d.horizon, d.n_u))
    x = simulate(m, u)
    assert np.allclose(x[0], m.x_init)
    for t in range(d.horizon - 1):
        assert np.allclose(x[t + 1], m.dynamics(x[t], u[t]))


# -- derivative_check -------------------------------------------------------

def linear_quadratic_toy():
    A = np.array([[1.0, 0.1], [0.0, 0.9]])
    B = np.array([[0.0], [0.5]])
    return chain_model(
        4, 2, 1, 0,
        cost=lambda x, u: 0.5 * float(x @ x + u @ u),
        cost_x=lambda x, u: x,
        cost_u=lambda x, u: u,
        cost_xx=lambda x, u: np.eye(2),
        cost_ux=lambda x, u: np.zeros((1, 2)),
        cost_uu=lambda x, u: np.eye(1),
        dynamics=lambda x, u: A @ x + B @ u,
        dynamics_x=lambda x, u: A,
        dynamics_u=lambda x, u: B,
    )


def test_derivative_check_exact_linear_dynamics():
    m = linear_quadratic_toy()
    rng = np.random.default_rng(5)
    rep = derivative_check(m, rng.standard_normal(2), rng.standard_normal(1))
    assert rep["dynamics_x"] <= 1e-9
    assert rep["dynamics_u"] <= 1e-9


def test_derivative_check_exact_quadratic_cost():
    m = linear_quadratic_toy()
    rng = np.random.default_rng(6)
    rep = derivative_check(m, rng.standard_normal(2), rng.standard_normal(1))
    for key in ("cost_x", "cost_u", "cost_xx", "cost_ux", "cost_uu"):
        assert rep[key] <= 1e-7


def test_derivative_check_detects_corruption():
    import dataclasses

    m = linear_quadratic_toy()
    B_bad = np.array([[0.1], [0.5]])
    bad = dataclasses.replace(m, dynamics_u=lambda x, u: B_bad)
    rep = derivative_check(bad, np.zeros(2), np.zeros(1))
    assert rep["dynamics_u"] >= 0.01


# -- KKT residuals ----------------------------------------------------------

def test_residuals_zero_on_trivial_problem():
    m = chain_model(3, 1, 1, 0)
    N = 3
    it = Iterate(
        x=np.zeros((N, 1)), u=np.zeros((N, 1)), phi=np.zeros((N, 0)),
        lam=np.zeros((N, 1)), z=np.zeros((N, 1)), theta=0.0, lagrangian=0.0,
    )
    res = kkt_residuals(m, it)
    assert np.all(res.grad_x == 0.0)
    assert np.all(res.grad_u == 0.0)
    assert np.all(res.dyn_gap == 0.0)
    assert optimality_error(m, it) == 0.0


def test_residuals_vanish_at_oracle_solution():
    m = build_eqlq(seed=7)
    sol = stacked_kkt_oracle(m)
    it = Iterate(
        x=sol.x, u=sol.u, phi=sol.phi, lam=sol.lam,
        z=np.zeros_like(sol.u), theta=0.0, lagrangian=0.0,
    )
    res = kkt_residuals(m, it)
    for block in (res.grad_x, res.grad_u, res.stage, res.dyn_gap):
        assert np.max(np.abs(block)) < 1e-10
    assert optimality_error(m, it) < 1e-10


def test_optimality_error_is_max_norm():
    m = chain_model(
        1, 1, 2, 0,
        cost=lambda x, u: 0.3 * u[0] - 0.7 * u[1],
        cost_u=lambda x, u: np.array([0.3, -0.7]),
        cost_uu=lambda x, u: np.zeros((2, 2)),
        cost_ux=lambda x, u: np.zeros((2, 1)),
    )
    it = Iterate(
        x=np.zeros((1, 1)), u=np.zeros((1, 2)), phi=np.zeros((1, 0)),
        lam=np.zeros((1, 1)), z=np.zeros((1, 2)), theta=0.0, lagrangian=0.0,
    )
    assert optimality_error(m, it) == 0.7


def test_grad_u_matches_finite_difference_of_lagrangian():
    m = build_eqlq(seed=8)
    d = m.dims
    rng = np.random.default_rng(8)
    x = rng.standard_normal((d.horizon, d.n_x))
    u = rng.standard_normal((d.horizon, d.n_u))
    phi = rng.standard_normal((d.horizon, d.n_c))
    lam = rng.standard_normal((d.horizon, d.n_x))
    it = Iterate(x=x, u=u, phi=phi, lam=lam, z=np.zeros_like(u),
                 theta=0.0, lagrangian=0.0)
    res = kkt_residuals(m, it)
    # L(w, lambda) holds states fixed, so the u_t gradient of the summed
    # Lagrangian (multiplier terms included) is the grad_u row without the
    # dynamics coupling; rebuild that row and difference the plain sum.
    t, j = 2, 1
    h = 1e-6

    def f(v):
        uu = u.copy()
        uu[t, j] = v
        total = evaluate_lagrangian(m, x, uu, phi)
        for s in range(d.horizon - 1):
            total += float(lam[s + 1] @ m.dynamics(x[s], uu[s]))
        return total

    fd = (f(u[t, j] + h) - f(u[t, j] - h)) / (2 * h)
    assert abs(res.grad_u[t, j] - fd) < 1e-6


def test_shape_validation():
    try:
        Dims(horizon=0, n_x=1, n_u=1, n_c=0)
    except ValueError:
        pass
    else:
        assert False
    try:
        Dims(horizon=2, n_x=1, n_u=1, n_c=2)
    except ValueError:
        pass
    else:
        assert False
