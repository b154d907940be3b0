"""Acrobot swing-up with hard elbow joint limits.

Two-link pendulum, point masses at the link ends, torque at the elbow
only.  The elbow angle is kept inside [-limit, +limit] by a pair of
one-sided contact impulses: slacks s+ and s- measure the gap to each
stop, impulses lam+ and lam- push back, and the products are relaxed to
kappa.  During a bounded solve the relaxation tracks the barrier weight
as max(kappa, kappa_scale * mu), landing on kappa when the weight
bottoms out.  The impulses enter the elbow Euler-Lagrange row with
opposite signs so each stop only pushes away from itself.

Control layout: (tau, q1_next, q2_next, lam+, lam-, s+, s-); the last
four are nonnegative through the mask.  Constraint layout: two discrete
Euler-Lagrange residuals, two slack definitions, two products.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp

from ..ocp import OcpModel
from .relax import couple_product_offset
from .symbolic import build_symbolic_model, discrete_el_rows

Array = np.ndarray

# Barrier start the registry pairs with this model.  The continuation from
# here reaches weights below the 1e-7 exit threshold only at 1.35e-8 and at
# the 1e-8 floor, so the final relaxation kappa_scale * mu stays within the
# 1e-6 complementarity target.
NOMINAL_MU_INIT = 0.1

ACROBOT_DEFAULTS = {
    "mass_1": 1.0,
    "mass_2": 1.0,
    "length_1": 1.0,
    "length_2": 1.0,
    "gravity": 9.81,
    "kappa": 1e-7,
    "kappa_scale": 50.0,
    "limit": np.pi / 2,
    "w_shoulder": 10.0,
    "w_elbow": 1.0,
    "w_rate": 0.1,
    "r_torque": 1e-3,
    "r_contact": 1e-6,
}


@lru_cache(maxsize=None)
def _build(
    horizon: int,
    dt: float,
    mass_1: float,
    mass_2: float,
    length_1: float,
    length_2: float,
    gravity: float,
    kappa: float,
    limit: float,
    w_shoulder: float,
    w_elbow: float,
    w_rate: float,
    r_torque: float,
    r_contact: float,
) -> OcpModel:
    q1p, q2p, q1c, q2c = sp.symbols("q1p q2p q1c q2c", real=True)
    tau, q1n, q2n = sp.symbols("tau q1n q2n", real=True)
    lam_p, lam_m, s_p, s_m = sp.symbols("lam_p lam_m s_p s_m", real=True)
    x_syms = (q1p, q2p, q1c, q2c)
    u_syms = (tau, q1n, q2n, lam_p, lam_m, s_p, s_m)

    def lagrangian(qs, vs):
        q1, q2 = qs
        v1, v2 = vs
        ke = (
            (mass_1 + mass_2) / 2 * length_1**2 * v1**2
            + mass_2 / 2 * length_2**2 * (v1 + v2) ** 2
            + mass_2 * length_1 * length_2 * v1 * (v1 + v2) * sp.cos(q2)
        )
        pe = (
            -(mass_1 + mass_2) * gravity * length_1 * sp.cos(q1)
            - mass_2 * gravity * length_2 * sp.cos(q1 + q2)
        )
        return ke - pe

    el = discrete_el_rows((q1p, q2p), (q1c, q2c), (q1n, q2n), lagrangian, dt)
    el[1] = el[1] + dt * (tau - lam_p + lam_m)

    constraints = el + [
        s_p - (limit - q2n),
        s_m - (q2n + limit),
        lam_p * s_p - kappa,
        lam_m * s_m - kappa,
    ]
    dynamics = [q1c, q2c, q1n, q2n]

    cost = (
        w_shoulder / 2 * (q1c - sp.pi) ** 2
        + w_elbow / 2 * q2c**2
        + w_rate / 2 * (((q1c - q1p) / dt) ** 2 + ((q2c - q2p) / dt) ** 2)
        + r_torque / 2 * tau**2
        + r_contact / 2 * (lam_p**2 + lam_m**2 + s_p**2 + s_m**2)
    )

    mask = (False, False, False, True, True, True, True)
    return build_symbolic_model(
        name="acrobot-limits",
        x_syms=x_syms,
        u_syms=u_syms,
        cost_expr=cost,
        dynamics_exprs=dynamics,
        constraint_exprs=constraints,
        x_init=np.zeros(4),
        horizon=horizon,
        nonneg_mask=mask,
    )


def build_acrobot(horizon: int = 50, dt: float = 0.05, **params: float) -> OcpModel:
    p = dict(ACROBOT_DEFAULTS)
    p.update(params)
    base = _build(
        horizon, dt, p["mass_1"], p["mass_2"], p["length_1"], p["length_2"],
        p["gravity"], p["kappa"], p["limit"], p["w_shoulder"], p["w_elbow"],
        p["w_rate"], p["r_torque"], p["r_contact"],
    )
    return couple_product_offset(base, [4, 5], p["kappa"], p["kappa_scale"])


@lru_cache(maxsize=None)
def _build_plain(
    horizon: int,
    dt: float,
    mass_1: float,
    mass_2: float,
    length_1: float,
    length_2: float,
    gravity: float,
    w_shoulder: float,
    w_elbow: float,
    w_rate: float,
    r_torque: float,
) -> OcpModel:
    q1p, q2p, q1c, q2c = sp.symbols("q1p q2p q1c q2c", real=True)
    tau, q1n, q2n = sp.symbols("tau q1n q2n", real=True)
    x_syms = (q1p, q2p, q1c, q2c)
    u_syms = (tau, q1n, q2n)

    def lagrangian(qs, vs):
        q1, q2 = qs
        v1, v2 = vs
        ke = (
            (mass_1 + mass_2) / 2 * length_1**2 * v1**2
            + mass_2 / 2 * length_2**2 * (v1 + v2) ** 2
            + mass_2 * length_1 * length_2 * v1 * (v1 + v2) * sp.cos(q2)
        )
        pe = (
            -(mass_1 + mass_2) * gravity * length_1 * sp.cos(q1)
            - mass_2 * gravity * length_2 * sp.cos(q1 + q2)
        )
        return ke - pe

    el = discrete_el_rows((q1p, q2p), (q1c, q2c), (q1n, q2n), lagrangian, dt)
    el[1] = el[1] + dt * tau

    cost = (
        w_shoulder / 2 * (q1c - sp.pi) ** 2
        + w_elbow / 2 * q2c**2
        + w_rate / 2 * (((q1c - q1p) / dt) ** 2 + ((q2c - q2p) / dt) ** 2)
        + r_torque / 2 * tau**2
    )

    return build_symbolic_model(
        name="acrobot-plain",
        x_syms=x_syms,
        u_syms=u_syms,
        cost_expr=cost,
        dynamics_exprs=[q1c, q2c, q1n, q2n],
        constraint_exprs=el,
        x_init=np.zeros(4),
        horizon=horizon,
    )


def build_acrobot_plain(horizon: int = 50, dt: float = 0.05, **params: float) -> OcpModel:
    """Swing-up in the same implicit form with a free elbow, no stops."""
    p = dict(ACROBOT_DEFAULTS)
    p.update(params)
    return _build_plain(
        horizon, dt, p["mass_1"], p["mass_2"], p["length_1"], p["length_2"],
        p["gravity"], p["w_shoulder"], p["w_elbow"], p["w_rate"], p["r_torque"],
    )


def acrobot_initial_controls(model: OcpModel, dt: float, **params: float) -> Array:
    """Hanging rest warm start with both relaxed products satisfied.

    Slacks sit at their actual gaps to the stops and each impulse at
    kappa0 / gap, so every product row holds exactly at the relaxation's
    starting offset and the two impulses cancel in the elbow
    Euler-Lagrange row.
    """
    p = dict(ACROBOT_DEFAULTS)
    p.update(params)
    kappa0 = max(p["kappa"], p["kappa_scale"] * NOMINAL_MU_INIT)
    N = model.dims.horizon
    u = np.zeros((N, 7))
    u[:, 1] = model.x_init[2]
    u[:, 2] = model.x_init[3]
    u[:, 5] = p["limit"] - model.x_init[3]
    u[:, 6] = model.x_init[3] + p["limit"]
    u[:, 3] = kappa0 / u[:, 5]
    u[:, 4] = kappa0 / u[:, 6]
    return u
