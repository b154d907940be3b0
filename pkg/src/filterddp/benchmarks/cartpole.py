"""Cart-pole swing-up with Coulomb friction at the cart and the pole joint.

Configuration q = (cart position, pole angle from hanging).  The state
stacks the previous and current configuration; the control carries the
push force, the next configuration and, per contact, the friction force
components (beta+, beta-), the sliding-speed slack psi and three defined
slacks (s1, s2, s3).  The force-side variables beta+, beta- and s1 are
kept in units of the contact's cone bound cap, so the actual friction
force is cap * (beta+ - beta-) and the cone radius is one; psi, s2 and
s3 stay in velocity units.  Stage constraints are the two discrete
Euler-Lagrange residuals plus, per contact, the three slack definitions
and the three complementarity products relaxed to kappa:

    s1 = 1 - beta+ - beta-        beta+ s2 = kappa
    s2 = psi + v                  beta- s3 = kappa
    s3 = psi - v                  psi  s1 = kappa

Without the normalization the two contacts put rows and variables at
scales cap and cap^2 apart (the pole cone is seventeen times smaller
than the cart cone here) inside one stage system that shares a single
isotropic inertia shift and one fraction-to-boundary rule, and the
mismatch shows up as spurious near-singularity.  Normalized, every
constraint row and every contact variable sits at order one for both
contacts.

During a bounded solve the relaxation tracks the barrier weight as
max(kappa, min(kappa_scale * mu, 1 / 9)).  The ceiling keeps a loose
early barrier from forcing slacks outside the cone (the isotropic point
with every block component at one third satisfies both products at
exactly 1 / 9) while the floor still lands on kappa when the weight
bottoms out; a product of kappa in normalized units is a physical
residual of cap * kappa.  All friction variables are nonnegative
through the mask.  Normal forces are held constant (total weight at the
cart contact, a torque scale at the pole joint) so each cone cap is a
fixed number.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp

from ..ocp import OcpModel
from .relax import couple_product_offset
from .symbolic import build_symbolic_model, discrete_el_rows

Array = np.ndarray

# Barrier start the registry pairs with this model.  Large enough that both
# contact relaxations start at their geometric ceilings (matching the warm
# start below), with a continuation whose sub-1e-7 weights are 1.35e-8 and
# the 1e-8 floor, keeping the final relaxation within the 1e-6
# complementarity target.
NOMINAL_MU_INIT = 0.1

CARTPOLE_DEFAULTS = {
    "mass_cart": 1.0,
    "mass_pole": 0.3,
    "length": 0.5,
    "gravity": 9.81,
    "mu_cart": 0.1,
    "mu_pole": 0.05,
    "kappa": 1e-7,
    "kappa_scale": 50.0,
    "w_pos": 1.0,
    "w_angle": 10.0,
    "w_rate": 0.1,
    "r_force": 1e-3,
    "r_contact": 1e-6,
}

# Exact zero friction makes the relaxed products infeasible, so coefficients
# are floored at a small positive value.
MU_FLOOR = 1e-6


def _contact_rows(kappa: float, beta_p, beta_m, psi, s1, s2, s3, vel):
    return [
        s1 - (1 - beta_p - beta_m),
        s2 - (psi + vel),
        s3 - (psi - vel),
        beta_p * s2 - kappa,
        beta_m * s3 - kappa,
        psi * s1 - kappa,
    ]


@lru_cache(maxsize=None)
def _build(
    horizon: int,
    dt: float,
    mass_cart: float,
    mass_pole: float,
    length: float,
    gravity: float,
    mu_cart: float,
    mu_pole: float,
    kappa: float,
    w_pos: float,
    w_angle: float,
    w_rate: float,
    r_force: float,
    r_contact: float,
) -> OcpModel:
    mu_cart = max(mu_cart, MU_FLOOR)
    mu_pole = max(mu_pole, MU_FLOOR)
    cap_cart = mu_cart * (mass_cart + mass_pole) * gravity
    cap_pole = mu_pole * mass_pole * gravity * length

    pp, thp, pc, thc = sp.symbols("pp thp pc thc", real=True)
    force, pn, thn = sp.symbols("F pn thn", real=True)
    cart_fric = sp.symbols("bc_p bc_m psi_c s1c s2c s3c", real=True)
    pole_fric = sp.symbols("bp_p bp_m psi_p s1p s2p s3p", real=True)
    x_syms = (pp, thp, pc, thc)
    u_syms = (force, pn, thn) + cart_fric + pole_fric

    def lagrangian(qs, vs):
        p_dot, th_dot = vs
        th = qs[1]
        ke = (
            (mass_cart + mass_pole) / 2 * p_dot**2
            + mass_pole * length * sp.cos(th) * p_dot * th_dot
            + mass_pole * length**2 / 2 * th_dot**2
        )
        pe = -mass_pole * gravity * length * sp.cos(th)
        return ke - pe

    el = discrete_el_rows((pp, thp), (pc, thc), (pn, thn), lagrangian, dt)
    el[0] = el[0] + dt * (force + cap_cart * (cart_fric[0] - cart_fric[1]))
    el[1] = el[1] + dt * cap_pole * (pole_fric[0] - pole_fric[1])

    v_cart = (pn - pc) / dt
    v_pole = (thn - thc) / dt
    constraints = (
        el
        + _contact_rows(kappa, *cart_fric, v_cart)
        + _contact_rows(kappa, *pole_fric, v_pole)
    )
    dynamics = [pc, thc, pn, thn]

    rate_p = (pc - pp) / dt
    rate_th = (thc - thp) / dt
    cost = (
        w_pos / 2 * pc**2
        + w_angle / 2 * (thc - sp.pi) ** 2
        + w_rate / 2 * (rate_p**2 + rate_th**2)
        + r_force / 2 * force**2
        + r_contact / 2 * sum(s**2 for s in cart_fric + pole_fric)
    )

    mask = (False, False, False) + (True,) * 12
    return build_symbolic_model(
        name="cartpole-friction",
        x_syms=x_syms,
        u_syms=u_syms,
        cost_expr=cost,
        dynamics_exprs=dynamics,
        constraint_exprs=constraints,
        x_init=np.zeros(4),
        horizon=horizon,
        nonneg_mask=mask,
    )


def _cone_caps(p: dict) -> tuple[float, float]:
    cap_cart = max(p["mu_cart"], MU_FLOOR) * (p["mass_cart"] + p["mass_pole"]) * p["gravity"]
    cap_pole = max(p["mu_pole"], MU_FLOOR) * p["mass_pole"] * p["gravity"] * p["length"]
    return cap_cart, cap_pole


def build_cartpole(horizon: int = 50, dt: float = 0.05, **params: float) -> OcpModel:
    p = dict(CARTPOLE_DEFAULTS)
    p.update(params)
    base = _build(
        horizon, dt, p["mass_cart"], p["mass_pole"], p["length"], p["gravity"],
        p["mu_cart"], p["mu_pole"], p["kappa"], p["w_pos"], p["w_angle"],
        p["w_rate"], p["r_force"], p["r_contact"],
    )
    return couple_product_offset(
        base, [5, 6, 7, 11, 12, 13], p["kappa"], p["kappa_scale"],
        ceiling=[1.0 / 9.0] * 6,
    )


@lru_cache(maxsize=None)
def _build_plain(
    horizon: int,
    dt: float,
    mass_cart: float,
    mass_pole: float,
    length: float,
    gravity: float,
    w_pos: float,
    w_angle: float,
    w_rate: float,
    r_force: float,
) -> OcpModel:
    pp, thp, pc, thc = sp.symbols("pp thp pc thc", real=True)
    force, pn, thn = sp.symbols("F pn thn", real=True)
    x_syms = (pp, thp, pc, thc)
    u_syms = (force, pn, thn)

    def lagrangian(qs, vs):
        p_dot, th_dot = vs
        th = qs[1]
        ke = (
            (mass_cart + mass_pole) / 2 * p_dot**2
            + mass_pole * length * sp.cos(th) * p_dot * th_dot
            + mass_pole * length**2 / 2 * th_dot**2
        )
        pe = -mass_pole * gravity * length * sp.cos(th)
        return ke - pe

    el = discrete_el_rows((pp, thp), (pc, thc), (pn, thn), lagrangian, dt)
    el[0] = el[0] + dt * force

    rate_p = (pc - pp) / dt
    rate_th = (thc - thp) / dt
    cost = (
        w_pos / 2 * pc**2
        + w_angle / 2 * (thc - sp.pi) ** 2
        + w_rate / 2 * (rate_p**2 + rate_th**2)
        + r_force / 2 * force**2
    )

    return build_symbolic_model(
        name="cartpole-plain",
        x_syms=x_syms,
        u_syms=u_syms,
        cost_expr=cost,
        dynamics_exprs=[pc, thc, pn, thn],
        constraint_exprs=el,
        x_init=np.zeros(4),
        horizon=horizon,
    )


def build_cartpole_plain(horizon: int = 50, dt: float = 0.05, **params: float) -> OcpModel:
    """Frictionless swing-up in the same implicit form, no contact variables."""
    p = dict(CARTPOLE_DEFAULTS)
    p.update(params)
    return _build_plain(
        horizon, dt, p["mass_cart"], p["mass_pole"], p["length"], p["gravity"],
        p["w_pos"], p["w_angle"], p["w_rate"], p["r_force"],
    )


def cartpole_initial_controls(model: OcpModel, dt: float, **params: float) -> Array:
    """Stationary warm start at each cone's isotropic interior point.

    Every friction-block component sits at one third in normalized
    units, which makes all three slack definitions hold exactly at zero
    velocity and both relaxed products equal 1 / 9, the ceiling the
    relaxation starts from.
    """
    N = model.dims.horizon
    u = np.zeros((N, model.dims.n_u))
    u[:, 1] = model.x_init[2]
    u[:, 2] = model.x_init[3]
    if model.dims.n_u > 3:
        u[:, 3:15] = 1.0 / 3.0
    return u


def cartpole_complementarity(u: Array, **params: float) -> float:
    """Largest physical complementarity product over both contacts.

    Pairs follow the block layout (beta+ with s2, beta- with s3, psi
    with s1); multiplying by the cone bound undoes the force-side
    normalization, so the result is in force times velocity units.
    """
    p = dict(CARTPOLE_DEFAULTS)
    p.update(params)
    cap_cart, cap_pole = _cone_caps(p)
    worst = 0.0
    for base, cap in ((3, cap_cart), (9, cap_pole)):
        b_p, b_m, psi, s1, s2, s3 = (u[:, base + i] for i in range(6))
        for prod in (b_p * s2, b_m * s3, psi * s1):
            worst = max(worst, cap * float(np.abs(prod).max()))
    return worst
