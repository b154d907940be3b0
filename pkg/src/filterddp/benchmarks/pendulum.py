"""Torque-limited pendulum swing-up in inverse-dynamics form.

State is (angle, rate) with zero angle hanging down.  The control carries
the torque alongside the next state, and the integrator lives in the stage
constraints: a symplectic Euler step written as two residuals.  The
dynamics callback is then a plain selection of the next-state controls.

The capped variant replaces the torque control by the gap to the cap,
w = tau_cap - tau, constrained nonnegative through the mask, so the
applied torque never exceeds the cap.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp

from ..ocp import OcpModel
from .symbolic import build_symbolic_model

Array = np.ndarray

PENDULUM_DEFAULTS = {
    "mass": 1.0,
    "length": 1.0,
    "gravity": 9.81,
    "damping": 0.1,
    "w_angle": 10.0,
    "w_rate": 0.1,
    "r_torque": 1e-3,
    "q0": 0.0,
    "v0": 0.0,
}
TAU_CAP_DEFAULT = 2.5


@lru_cache(maxsize=None)
def _build(
    horizon: int,
    dt: float,
    mass: float,
    length: float,
    gravity: float,
    damping: float,
    w_angle: float,
    w_rate: float,
    r_torque: float,
    q0: float,
    v0: float,
    tau_cap: float | None,
) -> OcpModel:
    q, v = sp.symbols("q v", real=True)
    qn, vn = sp.symbols("qn vn", real=True)
    inertia = mass * length**2
    if tau_cap is None:
        first = sp.Symbol("tau", real=True)
        torque = first
        mask = None
        name = "pendulum"
    else:
        first = sp.Symbol("w", real=True)
        torque = tau_cap - first
        mask = (True, False, False)
        name = "pendulum-capped"
    accel = (torque - mass * gravity * length * sp.sin(q) - damping * v) / inertia
    constraints = [vn - v - dt * accel, qn - q - dt * vn]
    dynamics = [qn, vn]
    cost = (
        w_angle / 2 * (q - sp.pi) ** 2
        + w_rate / 2 * v**2
        + r_torque / 2 * torque**2
    )
    return build_symbolic_model(
        name=name,
        x_syms=(q, v),
        u_syms=(first, qn, vn),
        cost_expr=cost,
        dynamics_exprs=dynamics,
        constraint_exprs=constraints,
        x_init=np.array([q0, v0]),
        horizon=horizon,
        nonneg_mask=mask,
    )


def build_pendulum(horizon: int = 60, dt: float = 0.05, tau_cap: float | None = None,
                   **params: float) -> OcpModel:
    p = dict(PENDULUM_DEFAULTS)
    p.update(params)
    return _build(
        horizon, dt, p["mass"], p["length"], p["gravity"], p["damping"],
        p["w_angle"], p["w_rate"], p["r_torque"], p["q0"], p["v0"], tau_cap,
    )


def pendulum_initial_controls(
    model: OcpModel, dt: float, tau_cap: float | None = None, **params: float
) -> Array:
    """Passive-decay warm start: zero torque, next states from coasting.

    The returned controls are dynamically consistent, so the initial
    rollout carries no constraint violation.
    """
    p = dict(PENDULUM_DEFAULTS)
    p.update(params)
    N = model.dims.horizon
    inertia = p["mass"] * p["length"] ** 2
    u = np.zeros((N, 3))
    if tau_cap is not None:
        u[:, 0] = tau_cap
    q, v = model.x_init
    for t in range(N):
        v_next = v + dt * (-p["mass"] * p["gravity"] * p["length"] * np.sin(q)
                           - p["damping"] * v) / inertia
        q_next = q + dt * v_next
        u[t, 1] = q_next
        u[t, 2] = v_next
        q, v = q_next, v_next
    return u
