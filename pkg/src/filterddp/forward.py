"""Closed-loop rollout and the filter line search.

Trial points are produced by rolling the nonlinear dynamics forward under
the affine control/multiplier policies from the backward sweep, scaled by a
step size gamma.  Acceptance is decided by a two-dimensional filter over
(constraint violation, merit Lagrangian) plus a sufficient-decrease or
Armijo test, with step sizes halved until one passes or the floor is hit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .backward import GainsTrajectory
from .ocp import Iterate, OcpModel, evaluate_lagrangian

Array = np.ndarray


@dataclass(frozen=True)
class Filter:
    """Forbidden region: entries (theta_f, lagr_f) plus the violation cap."""

    entries: tuple[tuple[float, float], ...]
    theta_cap: float

    @classmethod
    def fresh(cls, theta_cap: float) -> "Filter":
        return cls((), theta_cap)

    def __len__(self) -> int:
        return len(self.entries)


def filter_blocks(flt: Filter, theta: float, lagr: float) -> bool:
    """True when (theta, lagr) lies in the forbidden region (non-strict)."""
    if theta >= flt.theta_cap:
        return True
    return any(theta >= tf and lagr >= lf for tf, lf in flt.entries)


def augment_filter(
    flt: Filter, theta_ref: float, lagr_ref: float,
    gamma_theta: float, gamma_lagr: float,
) -> Filter:
    """Add the margin-shrunk corner of the reference point, pruning dominated entries."""
    new = (
        (1.0 - gamma_theta) * theta_ref,
        lagr_ref - gamma_lagr * theta_ref,
    )
    pool = sorted(set(flt.entries) | {new})
    kept: list[tuple[float, float]] = []
    best = np.inf
    for tf, lf in pool:
        if lf < best:
            kept.append((tf, lf))
            best = lf
    return replace(flt, entries=tuple(kept))


def sufficient_decrease(
    theta_ref: float, lagr_ref: float, theta_new: float, lagr_new: float,
    gamma_theta: float, gamma_lagr: float,
) -> bool:
    """Progress in violation or in merit, relative to the reference pair."""
    return (
        theta_new <= (1.0 - gamma_theta) * theta_ref
        or lagr_new <= lagr_ref - gamma_lagr * theta_ref
    )


def switching_holds(
    m: float, gamma: float, theta_ref: float,
    delta: float, s_theta: float, s_lagr: float,
) -> bool:
    """Predicted decrease strong enough to justify an Armijo-only test."""
    if gamma * m >= 0.0:
        return False
    return (-gamma * m) ** s_lagr * gamma ** (1.0 - s_lagr) > delta * theta_ref ** s_theta


def armijo_holds(
    lagr_ref: float, lagr_new: float, m: float, gamma: float, eta_lagr: float
) -> bool:
    return lagr_new <= lagr_ref + eta_lagr * gamma * m


def fraction_to_boundary_ok(
    u_new: Array, z_new: Array, u_ref: Array, z_ref: Array,
    mask: Array, tau: float,
) -> bool:
    """Masked controls and duals keep at least a (1 - tau) fraction of their value."""
    if not mask.any():
        return True
    u_ok = np.all(u_new[:, mask] >= (1.0 - tau) * u_ref[:, mask])
    z_ok = np.all(z_new[:, mask] >= (1.0 - tau) * z_ref[:, mask])
    return bool(u_ok and z_ok)


@dataclass(frozen=True)
class TrialPoint:
    """Candidate iterate from one rollout; finite is False on divergence."""

    iterate: Iterate
    gamma: float
    theta: float
    lagrangian: float
    finite: bool


def rollout(
    model: OcpModel,
    current: Iterate,
    gains: GainsTrajectory,
    gamma: float,
    mu: float | None = None,
) -> TrialPoint:
    """Roll the closed-loop policies forward from the fixed initial state.

    States follow the exact dynamics; controls, constraint multipliers and
    bound duals follow their affine policies around the current trajectory.
    Non-finite values anywhere mark the trial as diverged; the merit pair
    is then set to inf and never consulted.
    """
    d = model.dims
    N = d.horizon
    x = np.zeros((N, d.n_x))
    u = np.zeros((N, d.n_u))
    phi = np.zeros((N, d.n_c))
    z = np.zeros((N, d.n_u))
    x[0] = model.x_init
    mask = model.nonneg_mask
    bad = TrialPoint(current, gamma, np.inf, np.inf, False)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for t in range(N):
            dx = x[t] - current.x[t]
            if not np.all(np.isfinite(dx)):
                return bad
            u[t] = current.u[t] + gamma * gains.alpha[t] + gains.beta[t] @ dx
            phi[t] = current.phi[t] + gamma * gains.psi[t] + gains.omega[t] @ dx
            z[t] = current.z[t] + gamma * gains.chi[t] + gains.zeta[t] @ dx
            if t < N - 1:
                x[t + 1] = np.asarray(model.dynamics(x[t], u[t]), dtype=float)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))
                and np.all(np.isfinite(phi)) and np.all(np.isfinite(z))):
            return bad
        try:
            theta = 0.0
            for t in range(N):
                if d.n_c:
                    theta += float(np.sum(np.abs(model.con_value(x[t], u[t]))))
            if not np.isfinite(theta):
                return bad
            barrier = mu if mu is not None else 0.0
            if barrier > 0.0 and mask.any() and np.any(u[:, mask] <= 0.0):
                # Always caught by the fraction-to-boundary test; the merit
                # value is never consulted for such trials.
                lagr = np.inf
            else:
                lagr = evaluate_lagrangian(model, x, u, phi, mu=barrier)
                if not np.isfinite(lagr):
                    return bad
        except (FloatingPointError, ValueError):
            return bad
    it = Iterate(x=x, u=u, phi=phi, lam=current.lam.copy(), z=z,
                 theta=float(theta), lagrangian=float(lagr))
    return TrialPoint(it, gamma, float(theta), float(lagr), True)


@dataclass(frozen=True)
class LineSearchOutcome:
    accepted: bool
    is_l_type: bool
    gamma: float
    trial: TrialPoint | None
    rejections: tuple[tuple[float, str], ...]


def line_search(
    model: OcpModel,
    current: Iterate,
    gains: GainsTrajectory,
    m: float,
    flt: Filter,
    cfg,
    theta_min: float,
    mu: float | None = None,
    tau: float | None = None,
) -> LineSearchOutcome:
    """Backtrack from gamma = 1 until a trial passes all acceptance gates.

    Order per trial: divergence, fraction-to-boundary (interior mode),
    filter membership, then either Armijo (when the violation is below
    theta_min and the switching test holds) or sufficient decrease.
    """
    theta_ref = current.theta
    lagr_ref = current.lagrangian
    rejections: list[tuple[float, str]] = []
    gamma = 1.0
    while gamma >= cfg.gamma_min:
        trial = rollout(model, current, gains, gamma, mu=mu)
        reason = None
        if not trial.finite:
            reason = "rollout-diverged"
        elif mu is not None and not fraction_to_boundary_ok(
            trial.iterate.u, trial.iterate.z, current.u, current.z,
            model.nonneg_mask, tau,
        ):
            reason = "boundary-violated"
        elif filter_blocks(flt, trial.theta, trial.lagrangian):
            reason = "filter-blocked"
        else:
            case_one = theta_ref < theta_min and switching_holds(
                m, gamma, theta_ref, cfg.delta, cfg.s_theta, cfg.s_lagr
            )
            if case_one:
                if armijo_holds(lagr_ref, trial.lagrangian, m, gamma, cfg.eta_lagr):
                    return LineSearchOutcome(True, True, gamma, trial, tuple(rejections))
                reason = "armijo-failed"
            else:
                if sufficient_decrease(
                    theta_ref, lagr_ref, trial.theta, trial.lagrangian,
                    cfg.gamma_theta, cfg.gamma_lagr,
                ):
                    return LineSearchOutcome(True, False, gamma, trial, tuple(rejections))
                reason = "insufficient-decrease"
        rejections.append((gamma, reason))
        gamma *= 0.5
    return LineSearchOutcome(False, False, 0.0, None, tuple(rejections))
