"""Problem containers and whole-trajectory evaluations.

A problem is a horizon of identical stages: a scalar stage cost l(x, u),
dynamics f(x, u) coupling consecutive states (the terminal stage has none),
and stage equality constraints c(x, u) = 0 with dim(c) <= dim(u).  Controls
may additionally carry elementwise nonnegativity bounds selected by a mask;
those are handled by the interior-point layer, not here.

Derivatives are caller-supplied analytic callbacks.  Finite differencing
lives in derivative_check and is a verification tool only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import contract_first

Array = np.ndarray
ScalarFn = Callable[[Array, Array], float]
VectorFn = Callable[[Array, Array], Array]


@dataclass(frozen=True)
class Dims:
    """Problem sizes.

    Attributes:
        horizon: number of stages N (>= 1).
        n_x: state dimension.
        n_u: control dimension.
        n_c: stage equality constraint dimension, n_c <= n_u.
    """

    horizon: int
    n_x: int
    n_u: int
    n_c: int

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.n_x < 1 or self.n_u < 1:
            raise ValueError(f"state/control dims must be >= 1, got {self.n_x}, {self.n_u}")
        if self.n_c < 0 or self.n_c > self.n_u:
            raise ValueError(f"need 0 <= n_c <= n_u, got n_c={self.n_c}, n_u={self.n_u}")


@dataclass(frozen=True)
class OcpModel:
    """Discrete-time equality-constrained optimal control problem.

    First derivatives of cost, dynamics and constraints are required.
    Second-derivative callbacks of dynamics and constraints may be None,
    meaning identically zero (exact for the linear case); the cost Hessian
    blocks are required.

    on_barrier_update, when set, is called by the solver with the barrier
    weight whenever a bounded solve starts or moves to a new subproblem.
    Models whose constraint data follows a relaxation schedule tied to the
    barrier weight adjust themselves here; the solver refreshes cached
    constraint measures afterwards.

    Shapes follow (index, u-block, x-block) ordering: con_ux(x, u) returns
    an (n_c, n_u, n_x) tensor of d2 c_i / du_j dx_k, and similarly for the
    other tensors.
    """

    dims: Dims
    x_init: Array
    cost: ScalarFn
    cost_x: VectorFn
    cost_u: VectorFn
    cost_xx: VectorFn
    cost_ux: VectorFn
    cost_uu: VectorFn
    dynamics: Optional[VectorFn] = None
    dynamics_x: Optional[VectorFn] = None
    dynamics_u: Optional[VectorFn] = None
    dynamics_xx: Optional[VectorFn] = None
    dynamics_ux: Optional[VectorFn] = None
    dynamics_uu: Optional[VectorFn] = None
    constraints: Optional[VectorFn] = None
    con_x: Optional[VectorFn] = None
    con_u: Optional[VectorFn] = None
    con_xx: Optional[VectorFn] = None
    con_ux: Optional[VectorFn] = None
    con_uu: Optional[VectorFn] = None
    nonneg_mask: Array = field(default=None)  # type: ignore[assignment]
    on_barrier_update: Optional[Callable[[float], None]] = None
    name: str = "ocp"

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_init", np.asarray(self.x_init, dtype=float))
        if self.x_init.shape != (self.dims.n_x,):
            raise ValueError(f"x_init shape {self.x_init.shape} != ({self.dims.n_x},)")
        mask = self.nonneg_mask
        if mask is None:
            mask = np.zeros(self.dims.n_u, dtype=bool)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.dims.n_u,):
            raise ValueError(f"nonneg_mask shape {mask.shape} != ({self.dims.n_u},)")
        object.__setattr__(self, "nonneg_mask", mask)
        if self.dims.horizon > 1 and self.dims.n_c >= 0:
            if self.dynamics is None or self.dynamics_x is None or self.dynamics_u is None:
                raise ValueError("dynamics and its first derivatives are required for horizon > 1")
        if self.dims.n_c > 0:
            if self.constraints is None or self.con_x is None or self.con_u is None:
                raise ValueError("constraints and first derivatives are required when n_c > 0")

    @property
    def has_bounds(self) -> bool:
        return bool(self.nonneg_mask.any())

    def con_value(self, x: Array, u: Array) -> Array:
        if self.dims.n_c == 0:
            return np.zeros(0)
        return np.asarray(self.constraints(x, u), dtype=float)


@dataclass
class Iterate:
    """One primal-dual trajectory with cached merit values.

    x: (N, n_x) states, u: (N, n_u) controls, phi: (N, n_c) stage constraint
    multipliers, lam: (N, n_x) dynamics multipliers (lam[0] pairs with the
    initial condition), z: (N, n_u) bound duals, zero off the mask.
    theta and lagrangian cache the merit pair of this trajectory; the
    lagrangian cache is mode dependent (it includes the barrier term under
    a positive barrier weight).
    """

    x: Array
    u: Array
    phi: Array
    lam: Array
    z: Array
    theta: float
    lagrangian: float

    def copy(self) -> "Iterate":
        return Iterate(
            self.x.copy(), self.u.copy(), self.phi.copy(),
            self.lam.copy(), self.z.copy(), self.theta, self.lagrangian,
        )


@dataclass(frozen=True)
class KktResiduals:
    """Stagewise first-order residuals.

    grad_x rows are the state stationarity residuals, grad_u the control
    stationarity residuals (bound duals subtracted on masked components),
    stage the equality constraint values and dyn_gap the dynamics gaps
    (dyn_gap[0] is the initial-condition gap).
    """

    grad_x: Array
    grad_u: Array
    stage: Array
    dyn_gap: Array


def _check_traj(model: OcpModel, x: Array, u: Array) -> tuple[Array, Array]:
    d = model.dims
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (d.horizon, d.n_x):
        raise ValueError(f"state trajectory shape {x.shape} != {(d.horizon, d.n_x)}")
    if u.shape != (d.horizon, d.n_u):
        raise ValueError(f"control trajectory shape {u.shape} != {(d.horizon, d.n_u)}")
    return x, u


def simulate(model: OcpModel, u: Array) -> Array:
    """Roll controls through the dynamics from the fixed initial state."""
    d = model.dims
    u = np.asarray(u, dtype=float)
    if u.shape != (d.horizon, d.n_u):
        raise ValueError(f"control trajectory shape {u.shape} != {(d.horizon, d.n_u)}")
    x = np.zeros((d.horizon, d.n_x))
    x[0] = model.x_init
    for t in range(d.horizon - 1):
        x[t + 1] = np.asarray(model.dynamics(x[t], u[t]), dtype=float)
    return x


def evaluate_cost(model: OcpModel, x: Array, u: Array) -> float:
    x, u = _check_traj(model, x, u)
    return float(sum(model.cost(x[t], u[t]) for t in range(model.dims.horizon)))


def evaluate_theta(model: OcpModel, x: Array, u: Array) -> float:
    """Constraint violation: sum over stages of the 1-norm of c(x_t, u_t)."""
    x, u = _check_traj(model, x, u)
    if model.dims.n_c == 0:
        return 0.0
    total = 0.0
    for t in range(model.dims.horizon):
        total += float(np.sum(np.abs(model.con_value(x[t], u[t]))))
    return total


def evaluate_lagrangian(
    model: OcpModel, x: Array, u: Array, phi: Array, mu: float = 0.0
) -> float:
    """Merit Lagrangian: sum of l + phi^T c, plus the barrier term when mu > 0.

    The dynamics multiplier terms vanish on rollout-consistent trajectories
    and are omitted.  With mu > 0 the barrier -mu * sum(log u_i) runs over
    masked components only.

    Raises:
        ValueError: if mu > 0 and a masked control is not strictly positive.
    """
    x, u = _check_traj(model, x, u)
    d = model.dims
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (d.horizon, d.n_c):
        raise ValueError(f"multiplier trajectory shape {phi.shape} != {(d.horizon, d.n_c)}")
    mask = model.nonneg_mask
    total = 0.0
    for t in range(d.horizon):
        total += float(model.cost(x[t], u[t]))
        if d.n_c:
            total += float(phi[t] @ model.con_value(x[t], u[t]))
        if mu > 0.0 and mask.any():
            bounded = u[t, mask]
            if np.any(bounded <= 0.0):
                raise ValueError(
                    f"barrier term undefined: nonpositive masked control at stage {t}"
                )
            total -= mu * float(np.sum(np.log(bounded)))
    return total


def kkt_residuals(model: OcpModel, it: Iterate) -> KktResiduals:
    """First-order residuals of the iterate under its own multipliers."""
    d = model.dims
    N = d.horizon
    grad_x = np.zeros((N, d.n_x))
    grad_u = np.zeros((N, d.n_u))
    stage = np.zeros((N, d.n_c))
    gap = np.zeros((N, d.n_x))
    gap[0] = model.x_init - it.x[0]
    for t in range(N):
        x_t, u_t, phi_t = it.x[t], it.u[t], it.phi[t]
        lx = np.asarray(model.cost_x(x_t, u_t), dtype=float)
        lu = np.asarray(model.cost_u(x_t, u_t), dtype=float)
        if d.n_c:
            lx = lx + phi_t @ np.asarray(model.con_x(x_t, u_t), dtype=float)
            lu = lu + phi_t @ np.asarray(model.con_u(x_t, u_t), dtype=float)
            stage[t] = model.con_value(x_t, u_t)
        gx = lx - it.lam[t]
        gu = lu - it.z[t]
        if t < N - 1:
            gx = gx + it.lam[t + 1] @ np.asarray(model.dynamics_x(x_t, u_t), dtype=float)
            gu = gu + it.lam[t + 1] @ np.asarray(model.dynamics_u(x_t, u_t), dtype=float)
            gap[t + 1] = np.asarray(model.dynamics(x_t, u_t), dtype=float) - it.x[t + 1]
        grad_x[t] = gx
        grad_u[t] = gu
    return KktResiduals(grad_x=grad_x, grad_u=grad_u, stage=stage, dyn_gap=gap)


def optimality_error(model: OcpModel, it: Iterate) -> float:
    """Max over stages of the control stationarity and constraint inf-norms.

    The state stationarity rows are identically zero when lam follows the
    backward recursion and are not measured.
    """
    res = kkt_residuals(model, it)
    err = float(np.max(np.abs(res.grad_u))) if res.grad_u.size else 0.0
    if res.stage.size:
        err = max(err, float(np.max(np.abs(res.stage))))
    return err


def _fd_vector(fn: Callable[[Array], Array], at: Array, h: float) -> Array:
    """Central-difference Jacobian of fn at the given point, columns stacked."""
    base = np.atleast_1d(np.asarray(fn(at), dtype=float))
    jac = np.zeros(base.shape + at.shape)
    for i in range(at.size):
        step = np.zeros_like(at)
        step[i] = h
        hi = np.atleast_1d(np.asarray(fn(at + step), dtype=float))
        lo = np.atleast_1d(np.asarray(fn(at - step), dtype=float))
        jac[..., i] = (hi - lo) / (2.0 * h)
    return jac


def derivative_check(model: OcpModel, x: Array, u: Array, h: float = 1e-5) -> dict[str, float]:
    """Compare supplied derivatives against central finite differences.

    First derivatives are checked against differences of the underlying
    values; second derivatives against differences of the supplied first
    derivatives.  Returns max elementwise errors, relative to
    max(1, inf-norm of the analytic value), keyed by callback name.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    report: dict[str, float] = {}

    def rel(err: Array, exact: Array) -> float:
        scale = max(1.0, float(np.max(np.abs(exact))) if np.size(exact) else 1.0)
        return float(np.max(np.abs(err)) / scale) if np.size(err) else 0.0

    def check(name: str, analytic_fn, fd_of, wrt: str) -> None:
        if analytic_fn is None:
            return
        exact = np.asarray(analytic_fn(x, u), dtype=float)
        if wrt == "x":
            fd = _fd_vector(lambda p: fd_of(p, u), x, h)
        else:
            fd = _fd_vector(lambda p: fd_of(x, p), u, h)
        report[name] = rel(np.squeeze(fd) - np.squeeze(exact), exact)

    check("cost_x", model.cost_x, model.cost, "x")
    check("cost_u", model.cost_u, model.cost, "u")
    check("cost_xx", model.cost_xx, model.cost_x, "x")
    check("cost_ux", model.cost_ux, model.cost_u, "x")
    check("cost_uu", model.cost_uu, model.cost_u, "u")
    if model.dynamics is not None:
        check("dynamics_x", model.dynamics_x, model.dynamics, "x")
        check("dynamics_u", model.dynamics_u, model.dynamics, "u")
        check("dynamics_xx", model.dynamics_xx, model.dynamics_x, "x")
        check("dynamics_ux", model.dynamics_ux, model.dynamics_u, "x")
        check("dynamics_uu", model.dynamics_uu, model.dynamics_u, "u")
    if model.dims.n_c > 0:
        check("con_x", model.con_x, model.constraints, "x")
        check("con_u", model.con_u, model.constraints, "u")
        check("con_xx", model.con_xx, model.con_x, "x")
        check("con_ux", model.con_ux, model.con_u, "x")
        check("con_uu", model.con_uu, model.con_u, "u")
    return report


@dataclass(frozen=True)
class StageDerivatives:
    """All derivatives of one stage at a fixed (x, u, phi).

    The L_* fields are derivatives of L = l + phi^T c.  Dynamics fields are
    None at the terminal stage; second-derivative tensors are None when the
    model omits them.
    """

    ell: float
    con: Array
    ell_x: Array
    ell_u: Array
    ell_xx: Array
    ell_ux: Array
    ell_uu: Array
    f_x: Optional[Array]
    f_u: Optional[Array]
    f_xx: Optional[Array]
    f_ux: Optional[Array]
    f_uu: Optional[Array]
    con_x: Array
    con_u: Array
    L_x: Array
    L_u: Array
    L_xx: Array
    L_ux: Array
    L_uu: Array

    @classmethod
    def evaluate(
        cls, model: OcpModel, x: Array, u: Array, phi: Array, terminal: bool
    ) -> "StageDerivatives":
        d = model.dims
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        phi = np.asarray(phi, dtype=float)
        ell = float(model.cost(x, u))
        ell_x = np.asarray(model.cost_x(x, u), dtype=float)
        ell_u = np.asarray(model.cost_u(x, u), dtype=float)
        ell_xx = np.asarray(model.cost_xx(x, u), dtype=float)
        ell_ux = np.asarray(model.cost_ux(x, u), dtype=float)
        ell_uu = np.asarray(model.cost_uu(x, u), dtype=float)
        if d.n_c:
            con = model.con_value(x, u)
            con_x = np.asarray(model.con_x(x, u), dtype=float)
            con_u = np.asarray(model.con_u(x, u), dtype=float)
            L_x = ell_x + phi @ con_x
            L_u = ell_u + phi @ con_u
            L_xx = ell_xx + (contract_first(phi, np.asarray(model.con_xx(x, u), dtype=float))
                             if model.con_xx is not None else 0.0)
            L_ux = ell_ux + (contract_first(phi, np.asarray(model.con_ux(x, u), dtype=float))
                             if model.con_ux is not None else 0.0)
            L_uu = ell_uu + (contract_first(phi, np.asarray(model.con_uu(x, u), dtype=float))
                             if model.con_uu is not None else 0.0)
        else:
            con = np.zeros(0)
            con_x = np.zeros((0, d.n_x))
            con_u = np.zeros((0, d.n_u))
            L_x, L_u = ell_x, ell_u
            L_xx, L_ux, L_uu = ell_xx, ell_ux, ell_uu
        if terminal:
            f_x = f_u = f_xx = f_ux = f_uu = None
        else:
            f_x = np.asarray(model.dynamics_x(x, u), dtype=float)
            f_u = np.asarray(model.dynamics_u(x, u), dtype=float)
            f_xx = (np.asarray(model.dynamics_xx(x, u), dtype=float)
                    if model.dynamics_xx is not None else None)
            f_ux = (np.asarray(model.dynamics_ux(x, u), dtype=float)
                    if model.dynamics_ux is not None else None)
            f_uu = (np.asarray(model.dynamics_uu(x, u), dtype=float)
                    if model.dynamics_uu is not None else None)
        return cls(
            ell=ell, con=con, ell_x=ell_x, ell_u=ell_u, ell_xx=ell_xx,
            ell_ux=ell_ux, ell_uu=ell_uu, f_x=f_x, f_u=f_u, f_xx=f_xx,
            f_ux=f_ux, f_uu=f_uu, con_x=con_x, con_u=con_u, L_x=np.asarray(L_x),
            L_u=np.asarray(L_u), L_xx=np.asarray(L_xx), L_ux=np.asarray(L_ux),
            L_uu=np.asarray(L_uu),
        )
