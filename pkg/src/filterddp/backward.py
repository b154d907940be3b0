"""Backward sweep: stage subproblems, inertia correction, value recursion.

Each stage contributes a symmetric saddle system over the control step and
the constraint multiplier step.  The system is factored with the inertia-
reporting LDL^T kernel; whenever the inertia differs from the target
(n_u, n_c, 0) the Hessian block is shifted by delta_w and, if zero pivots
were detected, the multiplier block by -delta_c.

One delta_w value is shared by every stage of a sweep.  On the first
wrong inertia the sweep is abandoned and rerun from the boundary with a
larger shift, escalating geometrically, so the accepted pass is a Newton
step on a single uniformly shifted problem.  Correcting stages
independently instead lets a shifted stage feed its (larger) curvature
into the value recursion, which raises the next shift, and the loop can
blow the recursion up on problems whose unshifted sweep is perfectly
tame.

The sweep also refreshes the dynamics multipliers lam by their recursion
and accumulates the predicted merit decrease m used by the line search.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import IllConditionedError, RegularizationOverflowError
from .linalg import SymIndefFactor, contract_first, ldlt_factor, ldlt_solve
from .ocp import Iterate, OcpModel, StageDerivatives

Array = np.ndarray


@dataclass(frozen=True)
class ValueState:
    """Cost-to-go gradient, curvature and dynamics multiplier at one stage."""

    v_x: Array
    v_xx: Array
    lam: Array

    @classmethod
    def boundary(cls, n_x: int) -> "ValueState":
        return cls(np.zeros(n_x), np.zeros((n_x, n_x)), np.zeros(n_x))


@dataclass(frozen=True)
class StageQ:
    """Stage subproblem data.

    qu/qx are the control/state gradients of the stage action; qu_hat is qu
    with the barrier gradient folded in (equal to qu in equality mode).
    H, B, C are the multiplier-based curvature blocks, A = con_u^T the
    constraint Jacobian transpose, con/con_x the constraint value and state
    Jacobian.  sigma holds the diagonal primal-dual barrier curvature and
    chi0 the feedforward core of the bound-dual update; both are zero off
    the mask and in equality mode.
    """

    qu: Array
    qx: Array
    qu_hat: Array
    H: Array
    B: Array
    C: Array
    A: Array
    con: Array
    con_x: Array
    sigma: Array
    chi0: Array


@dataclass(frozen=True)
class StageGains:
    """Feedforward/feedback pair for controls, multipliers and bound duals."""

    alpha: Array
    beta: Array
    psi: Array
    omega: Array
    chi: Array
    zeta: Array


@dataclass(frozen=True)
class GainsTrajectory:
    alpha: Array
    beta: Array
    psi: Array
    omega: Array
    chi: Array
    zeta: Array
    delta_w: Array


@dataclass(frozen=True)
class RegState:
    """Regularization bookkeeping threaded through stages and iterations.

    delta_w is the shift applied to the most recent stage system (0 when
    none was needed), delta_w_last the last nonzero shift that succeeded
    (warm start for later corrections), delta_c the multiplier-block shift
    of the most recent stage.
    """

    delta_w: float = 0.0
    delta_w_last: float = 0.0
    delta_c: float = 0.0


def assemble_stage_q(
    sd: StageDerivatives,
    nxt: ValueState,
    mask: Array,
    mu: float | None = None,
    u_bar: Array | None = None,
    z_bar: Array | None = None,
    gauss_newton: bool = False,
) -> StageQ:
    """Build the stage subproblem from stage derivatives and the next value.

    At the terminal stage (sd.f_x is None) the dynamics coupling terms
    vanish.  gauss_newton drops only the multiplier-weighted dynamics
    curvature tensors; constraint curvature inside L is kept.
    """
    n_u = sd.ell_u.shape[0]
    if sd.f_x is None:
        qu = sd.L_u.copy()
        qx = sd.L_x.copy()
        H = sd.L_uu.copy()
        B = sd.L_ux.copy()
        C = sd.L_xx.copy()
    else:
        qu = sd.L_u + nxt.v_x @ sd.f_u
        qx = sd.L_x + nxt.v_x @ sd.f_x
        H = sd.L_uu + sd.f_u.T @ nxt.v_xx @ sd.f_u
        B = sd.L_ux + sd.f_u.T @ nxt.v_xx @ sd.f_x
        C = sd.L_xx + sd.f_x.T @ nxt.v_xx @ sd.f_x
        if not gauss_newton:
            if sd.f_uu is not None:
                H = H + contract_first(nxt.lam, sd.f_uu)
            if sd.f_ux is not None:
                B = B + contract_first(nxt.lam, sd.f_ux)
            if sd.f_xx is not None:
                C = C + contract_first(nxt.lam, sd.f_xx)
    sigma = np.zeros(n_u)
    chi0 = np.zeros(n_u)
    qu_hat = qu
    if mu is not None and mask.any():
        u_m = u_bar[mask]
        sigma[mask] = z_bar[mask] / u_m
        qu_hat = qu.copy()
        qu_hat[mask] -= mu / u_m
        chi0[mask] = mu / u_m - z_bar[mask]
    return StageQ(
        qu=qu, qx=qx, qu_hat=qu_hat, H=H, B=B, C=C, A=sd.con_u.T,
        con=sd.con, con_x=sd.con_x, sigma=sigma, chi0=chi0,
    )


def _stage_matrix(q: StageQ, delta_w: float, delta_c: float) -> Array:
    n_u = q.H.shape[0]
    n_c = q.con.shape[0]
    K = np.zeros((n_u + n_c, n_u + n_c))
    K[:n_u, :n_u] = q.H + np.diag(q.sigma)
    K[:n_u, :n_u] += delta_w * np.eye(n_u)
    K[:n_u, n_u:] = q.A
    K[n_u:, :n_u] = q.A.T
    K[n_u:, n_u:] = -delta_c * np.eye(n_c)
    return K


def factor_stage(
    q: StageQ,
    delta_w: float,
    cfg,
    mu: float | None = None,
) -> tuple[SymIndefFactor, float]:
    """Factor one stage system at a fixed Hessian shift.

    delta_c is switched on only when the factorization at this shift
    reports zero pivots; the caller checks the returned inertia.
    """
    factor = ldlt_factor(_stage_matrix(q, delta_w, 0.0), cfg.zero_pivot_tol)
    if factor.inertia[2] == 0:
        return factor, 0.0
    delta_c = cfg.delta_c_bar * max(mu if mu is not None else 0.0, cfg.eps_tol) ** cfg.delta_c_exp
    factor = ldlt_factor(_stage_matrix(q, delta_w, delta_c), cfg.zero_pivot_tol)
    return factor, delta_c


def _next_delta_w(delta_w: float, reg: RegState, cfg) -> float:
    """Escalation schedule: warm start from the last success, then times 8."""
    if delta_w > 0.0:
        return delta_w * 8.0
    if reg.delta_w_last == 0.0:
        return cfg.delta_w_0
    return max(cfg.delta_w_min, reg.delta_w_last / 3.0)


def inertia_correct(
    q: StageQ,
    reg: RegState,
    cfg,
    mu: float | None = None,
) -> tuple[SymIndefFactor, RegState]:
    """Factor the stage system, shifting until the inertia is (n_u, n_c, 0).

    The unshifted system is tried first.  On the wrong inertia, delta_c is
    switched on only if zero pivots were observed, and delta_w starts from
    its base value (first-ever correction) or from delta_w_last / 3, then
    escalates by a factor of 8.

    Raises:
        RegularizationOverflowError: delta_w exceeded its cap.
    """
    n_u = q.H.shape[0]
    n_c = q.con.shape[0]
    target = (n_u, n_c, 0)
    delta_w = 0.0
    while delta_w <= cfg.delta_w_max:
        factor, delta_c = factor_stage(q, delta_w, cfg, mu=mu)
        if factor.inertia == target:
            if delta_w == 0.0:
                return factor, replace(reg, delta_w=0.0, delta_c=delta_c)
            return factor, RegState(delta_w=delta_w, delta_w_last=delta_w, delta_c=delta_c)
        delta_w = _next_delta_w(delta_w, reg, cfg)
    raise RegularizationOverflowError(
        f"no acceptable inertia below delta_w cap {cfg.delta_w_max:g}"
    )


def stage_gains(q: StageQ, factor: SymIndefFactor) -> StageGains:
    """Solve one factored stage system for all gain columns."""
    n_u = q.H.shape[0]
    n_x = q.qx.shape[0]
    rhs = np.zeros((n_u + q.con.shape[0], 1 + n_x))
    rhs[:n_u, 0] = q.qu_hat
    rhs[:n_u, 1:] = q.B
    rhs[n_u:, 0] = q.con
    rhs[n_u:, 1:] = q.con_x
    sol = ldlt_solve(factor, -rhs)
    alpha = sol[:n_u, 0]
    beta = sol[:n_u, 1:]
    psi = sol[n_u:, 0]
    omega = sol[n_u:, 1:]
    chi = q.chi0 - q.sigma * alpha
    zeta = -q.sigma[:, None] * beta
    return StageGains(alpha, beta, psi, omega, chi, zeta)


def solve_stage_kkt(
    q: StageQ,
    reg: RegState,
    cfg,
    mu: float | None = None,
) -> tuple[StageGains, SymIndefFactor, RegState]:
    """Correct, factor and solve one stage system in isolation.

    Raises:
        IllConditionedError: pivot-magnitude ratio above cfg.cond_limit
            after a successful inertia correction.
    """
    factor, reg = inertia_correct(q, reg, cfg, mu=mu)
    if factor.condition > cfg.cond_limit:
        raise IllConditionedError(
            f"stage system condition estimate {factor.condition:.2e} "
            f"exceeds limit {cfg.cond_limit:g}"
        )
    return stage_gains(q, factor), factor, reg


def update_value(
    q: StageQ, gains: StageGains, sd: StageDerivatives, nxt: ValueState,
    delta_w: float = 0.0,
) -> ValueState:
    """Propagate value gradient, curvature and dynamics multiplier one stage.

    Uses qu_hat, which equals qu in equality mode, so that the accumulated
    gradient stays the exact derivative of the line-search merit function.
    The quadratic term carries the same u-block the gains were solved with
    (curvature plus barrier diagonal plus the accepted shift); anything
    else propagates a model inconsistent with the feedback and the
    recursion can diverge even when every stage system is benign.
    """
    v_x = q.qx + gains.beta.T @ q.qu_hat + gains.omega.T @ q.con
    G = q.H + np.diag(q.sigma + delta_w)
    v_xx = q.C + gains.beta.T @ G @ gains.beta + q.B.T @ gains.beta + gains.beta.T @ q.B
    v_xx = 0.5 * (v_xx + v_xx.T)
    if sd.f_x is None:
        lam = sd.L_x.copy()
    else:
        lam = sd.L_x + nxt.lam @ sd.f_x
    return ValueState(v_x=v_x, v_xx=v_xx, lam=lam)


def backward_pass(
    model: OcpModel,
    it: Iterate,
    reg: RegState,
    cfg,
    mu: float | None = None,
) -> tuple[GainsTrajectory, float, RegState]:
    """Sweep all stages backward, returning gains, predicted decrease, reg.

    All stages share one delta_w; a wrong inertia anywhere abandons the
    sweep and reruns it from the boundary at the next shift on the
    escalation schedule.  Refreshes it.lam in place with the multiplier
    recursion.  The predicted decrease m accumulates
    qu_hat . alpha + psi . con over stages.

    Raises:
        RegularizationOverflowError: delta_w exceeded its cap.
        IllConditionedError: accepted-factorization pivot ratio above
            cfg.cond_limit at some stage.
    """
    d = model.dims
    N = d.horizon
    target = (d.n_u, d.n_c, 0)
    alpha = np.zeros((N, d.n_u))
    beta = np.zeros((N, d.n_u, d.n_x))
    psi = np.zeros((N, d.n_c))
    omega = np.zeros((N, d.n_c, d.n_x))
    chi = np.zeros((N, d.n_u))
    zeta = np.zeros((N, d.n_u, d.n_x))
    delta_w = 0.0
    while delta_w <= cfg.delta_w_max:
        nxt = ValueState.boundary(d.n_x)
        m = 0.0
        delta_c = 0.0
        clean = True
        for t in range(N - 1, -1, -1):
            sd = StageDerivatives.evaluate(
                model, it.x[t], it.u[t], it.phi[t], terminal=(t == N - 1)
            )
            q = assemble_stage_q(
                sd, nxt, model.nonneg_mask, mu=mu, u_bar=it.u[t], z_bar=it.z[t],
                gauss_newton=cfg.gauss_newton,
            )
            factor, delta_c_t = factor_stage(q, delta_w, cfg, mu=mu)
            if factor.inertia != target:
                clean = False
                break
            if factor.condition > cfg.cond_limit:
                raise IllConditionedError(
                    f"stage system condition estimate {factor.condition:.2e} "
                    f"exceeds limit {cfg.cond_limit:g}"
                )
            gains_t = stage_gains(q, factor)
            delta_c = max(delta_c, delta_c_t)
            m += float(q.qu_hat @ gains_t.alpha + gains_t.psi @ q.con)
            nxt = update_value(q, gains_t, sd, nxt, delta_w=delta_w)
            it.lam[t] = nxt.lam
            alpha[t] = gains_t.alpha
            beta[t] = gains_t.beta
            psi[t] = gains_t.psi
            omega[t] = gains_t.omega
            chi[t] = gains_t.chi
            zeta[t] = gains_t.zeta
        if clean:
            if delta_w == 0.0:
                reg = replace(reg, delta_w=0.0, delta_c=delta_c)
            else:
                reg = RegState(delta_w=delta_w, delta_w_last=delta_w, delta_c=delta_c)
            shifts = np.full(N, delta_w)
            return GainsTrajectory(alpha, beta, psi, omega, chi, zeta, shifts), m, reg
        delta_w = _next_delta_w(delta_w, reg, cfg)
    raise RegularizationOverflowError(
        f"no acceptable inertia below delta_w cap {cfg.delta_w_max:g}"
    )
