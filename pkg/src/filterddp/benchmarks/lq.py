"""Random equality-constrained linear-quadratic problems and a direct solver.

The direct solver stacks every stagewise first-order condition into one
dense linear system and hands it to numpy.  It shares no code with the
trajectory solver, which makes it a useful cross check on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ocp import Dims, OcpModel

Array = np.ndarray


class OracleDegenerateError(RuntimeError):
    """The stacked system was too ill-posed to trust its solution."""


def make_lq_model(
    x_init: Array,
    horizon: int,
    A: Array,
    B: Array,
    d: Array,
    Q: Array,
    P: Array,
    R: Array,
    q: Array,
    r: Array,
    G: Array | None = None,
    H: Array | None = None,
    h: Array | None = None,
    name: str = "lq",
) -> OcpModel:
    """Assemble a time-invariant LQ problem from its matrices.

    Stage cost is 0.5 x'Qx + 0.5 u'Ru + u'Px + q'x + r'u at every stage
    including the last, dynamics x+ = Ax + Bu + d, and optional stage
    constraints Gx + Hu + h = 0.  Second-derivative callbacks are omitted
    since they vanish for linear maps.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d = np.asarray(d, dtype=float)
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    R = np.asarray(R, dtype=float)
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    n_x, n_u = B.shape
    if A.shape != (n_x, n_x) or d.shape != (n_x,):
        raise ValueError("dynamics matrix shapes disagree")
    if Q.shape != (n_x, n_x) or R.shape != (n_u, n_u) or P.shape != (n_u, n_x):
        raise ValueError("cost matrix shapes disagree")
    has_con = G is not None
    if has_con:
        G = np.asarray(G, dtype=float)
        H = np.asarray(H, dtype=float)
        h = np.asarray(h, dtype=float)
        n_c = G.shape[0]
        if G.shape != (n_c, n_x) or H.shape != (n_c, n_u) or h.shape != (n_c,):
            raise ValueError("constraint matrix shapes disagree")
    else:
        n_c = 0

    dims = Dims(horizon=horizon, n_x=n_x, n_u=n_u, n_c=n_c)
    kwargs = dict(
        dims=dims,
        x_init=x_init,
        cost=lambda x, u: 0.5 * x @ Q @ x + 0.5 * u @ R @ u + u @ P @ x + q @ x + r @ u,
        cost_x=lambda x, u: Q @ x + P.T @ u + q,
        cost_u=lambda x, u: P @ x + R @ u + r,
        cost_xx=lambda x, u: Q,
        cost_ux=lambda x, u: P,
        cost_uu=lambda x, u: R,
        dynamics=lambda x, u: A @ x + B @ u + d,
        dynamics_x=lambda x, u: A,
        dynamics_u=lambda x, u: B,
        name=name,
    )
    if has_con:
        kwargs.update(
            constraints=lambda x, u: G @ x + H @ u + h,
            con_x=lambda x, u: G,
            con_u=lambda x, u: H,
        )
    return OcpModel(**kwargs)


def build_eqlq(
    seed: int,
    horizon: int = 5,
    n_x: int = 2,
    n_u: int = 2,
    n_c: int = 1,
) -> OcpModel:
    """Draw a random well-posed constrained LQ instance.

    The dynamics matrix is rescaled to spectral norm 0.9, the joint cost
    Hessian is M'M + 0.5 I so every stage is strongly convex, and the
    constraint control Jacobian has its singular values floored at 0.3 so
    full row rank holds with margin.
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n_x, n_x))
    A *= 0.9 / max(np.linalg.norm(A, 2), 1e-12)
    B = rng.standard_normal((n_x, n_u))
    d = 0.3 * rng.standard_normal(n_x)
    M = rng.standard_normal((n_x + n_u, n_x + n_u))
    hess = M.T @ M + 0.5 * np.eye(n_x + n_u)
    Q = hess[:n_x, :n_x]
    P = hess[n_x:, :n_x]
    R = hess[n_x:, n_x:]
    q = 0.3 * rng.standard_normal(n_x)
    r = 0.3 * rng.standard_normal(n_u)
    G = rng.standard_normal((n_c, n_x))
    Hc = rng.standard_normal((n_c, n_u))
    U, s, Vt = np.linalg.svd(Hc, full_matrices=False)
    Hc = U @ np.diag(np.maximum(s, 0.3)) @ Vt
    h = 0.3 * rng.standard_normal(n_c)
    x_init = rng.standard_normal(n_x)
    return make_lq_model(
        x_init, horizon, A, B, d, Q, P, R, q, r, G, Hc, h,
        name=f"eqlq-{seed}",
    )


@dataclass(frozen=True)
class StackedSolution:
    """Optimal trajectory of an LQ instance from the direct solver."""

    x: Array
    u: Array
    phi: Array
    lam: Array


def _probe_matrices(model: OcpModel) -> dict[str, Array]:
    d = model.dims
    zx = np.zeros(d.n_x)
    zu = np.zeros(d.n_u)
    mats = {
        "Q": np.asarray(model.cost_xx(zx, zu), dtype=float),
        "P": np.asarray(model.cost_ux(zx, zu), dtype=float),
        "R": np.asarray(model.cost_uu(zx, zu), dtype=float),
        "q": np.asarray(model.cost_x(zx, zu), dtype=float),
        "r": np.asarray(model.cost_u(zx, zu), dtype=float),
        "A": np.asarray(model.dynamics_x(zx, zu), dtype=float),
        "B": np.asarray(model.dynamics_u(zx, zu), dtype=float),
        "d": np.asarray(model.dynamics(zx, zu), dtype=float),
    }
    if d.n_c:
        mats["G"] = np.asarray(model.con_x(zx, zu), dtype=float)
        mats["H"] = np.asarray(model.con_u(zx, zu), dtype=float)
        mats["h"] = np.asarray(model.constraints(zx, zu), dtype=float)
    ones_x = np.ones(d.n_x)
    ones_u = np.ones(d.n_u)
    lin = mats["Q"] @ ones_x + mats["P"].T @ ones_u + mats["q"]
    probe = np.asarray(model.cost_x(ones_x, ones_u), dtype=float)
    if np.max(np.abs(lin - probe)) > 1e-9 * max(1.0, np.max(np.abs(probe))):
        raise OracleDegenerateError("cost gradient is not affine; model is not LQ")
    return mats


def stacked_kkt_oracle(model: OcpModel) -> StackedSolution:
    """Solve an LQ instance by one dense factorization of its optimality system.

    Unknowns are [x_t, u_t, phi_t, lam_t] for every stage; lam_t pairs with
    the dynamics gap reaching stage t (the initial condition at t = 0).

    Raises:
        OracleDegenerateError: if the model is not LQ or the solved system
            has a large residual.
    """
    d = model.dims
    N = d.horizon
    m = _probe_matrices(model)
    n_x, n_u, n_c = d.n_x, d.n_u, d.n_c
    per = 2 * n_x + n_u + n_c
    size = N * per
    K = np.zeros((size, size))
    b = np.zeros(size)

    def xs(t: int) -> slice:
        return slice(t * per, t * per + n_x)

    def us(t: int) -> slice:
        return slice(t * per + n_x, t * per + n_x + n_u)

    def ps(t: int) -> slice:
        return slice(t * per + n_x + n_u, t * per + n_x + n_u + n_c)

    def ls(t: int) -> slice:
        return slice(t * per + n_x + n_u + n_c, (t + 1) * per)

    row = 0
    for t in range(N):
        # State stationarity: Q x + P'u + q + G'phi - lam_t + A'lam_{t+1} = 0.
        rs = slice(row, row + n_x)
        K[rs, xs(t)] = m["Q"]
        K[rs, us(t)] = m["P"].T
        if n_c:
            K[rs, ps(t)] = m["G"].T
        K[rs, ls(t)] = -np.eye(n_x)
        if t + 1 < N:
            K[rs, ls(t + 1)] = m["A"].T
        b[rs] = -m["q"]
        row += n_x
        # Control stationarity: P x + R u + r + H'phi + B'lam_{t+1} = 0.
        rs = slice(row, row + n_u)
        K[rs, xs(t)] = m["P"]
        K[rs, us(t)] = m["R"]
        if n_c:
            K[rs, ps(t)] = m["H"].T
        if t + 1 < N:
            K[rs, ls(t + 1)] = m["B"].T
        b[rs] = -m["r"]
        row += n_u
        # Dynamics gap reaching stage t.
        rs = slice(row, row + n_x)
        if t == 0:
            K[rs, xs(0)] = -np.eye(n_x)
            b[rs] = -model.x_init
        else:
            K[rs, xs(t - 1)] = m["A"]
            K[rs, us(t - 1)] = m["B"]
            K[rs, xs(t)] = -np.eye(n_x)
            b[rs] = -m["d"]
        row += n_x
        if n_c:
            rs = slice(row, row + n_c)
            K[rs, xs(t)] = m["G"]
            K[rs, us(t)] = m["H"]
            b[rs] = -m["h"]
            row += n_c

    try:
        sol = np.linalg.solve(K, b)
    except np.linalg.LinAlgError as exc:
        raise OracleDegenerateError(f"stacked system is singular: {exc}") from None
    resid = float(np.max(np.abs(K @ sol - b)))
    if resid > 1e-8 * (1.0 + float(np.max(np.abs(b)))):
        raise OracleDegenerateError(f"stacked system residual {resid:.3e} too large")

    x = np.stack([sol[xs(t)] for t in range(N)])
    u = np.stack([sol[us(t)] for t in range(N)])
    phi = (np.stack([sol[ps(t)] for t in range(N)])
           if n_c else np.zeros((N, 0)))
    lam = np.stack([sol[ls(t)] for t in range(N)])
    return StackedSolution(x=x, u=u, phi=phi, lam=lam)
