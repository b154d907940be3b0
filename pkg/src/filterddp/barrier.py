"""Barrier subproblem scheduling for masked control bounds.

Bounds u_i >= 0 on masked components are handled by a sequence of barrier
subproblems with weight mu driven toward zero.  A subproblem counts as
solved when its perturbed optimality measure drops below kappa_eps * mu;
the weight then shrinks superlinearly (floored near the overall tolerance),
the fraction-to-boundary margin tightens, and the filter is re-initialised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import Filter
from .ocp import Iterate, OcpModel, optimality_error


@dataclass(frozen=True)
class BarrierState:
    """Current barrier weight, boundary margin and subproblem counter."""

    mu: float
    tau: float
    index: int = 0


def perturbed_error(model: OcpModel, it: Iterate, mu: float) -> float:
    """Stationarity/feasibility error plus complementarity offset at weight mu.

    With mu = 0 this is the overall optimality measure of the bounded
    problem.  Unmasked components carry no complementarity term.
    """
    err = optimality_error(model, it)
    mask = model.nonneg_mask
    if mask.any():
        comp = it.z[:, mask] * it.u[:, mask] - mu
        err = max(err, float(np.max(np.abs(comp))))
    return err


def update_mu(mu: float, eps_tol: float, kappa_mu: float, theta_mu: float) -> float:
    return max(eps_tol / 10.0, min(kappa_mu * mu, mu ** theta_mu))


def advance_subproblem(
    model: OcpModel,
    it: Iterate,
    state: BarrierState,
    flt: Filter,
    cfg,
    repeat: bool = False,
) -> tuple[BarrierState, Filter, bool]:
    """Shrink mu while the current subproblem tests as converged.

    With repeat=False at most one shrink is applied; with repeat=True (the
    very first iteration) shrinks chain as long as each new subproblem
    still tests as converged.  Stops when mu reaches its floor unchanged.
    Returns the possibly updated state, a re-initialised filter on change,
    and whether anything changed.
    """
    changed = False
    state_out = state
    while perturbed_error(model, it, state_out.mu) < cfg.kappa_eps * state_out.mu:
        mu_next = update_mu(state_out.mu, cfg.eps_tol, cfg.kappa_mu, cfg.theta_mu)
        if mu_next >= state_out.mu:
            break
        state_out = BarrierState(
            mu=mu_next,
            tau=max(cfg.tau_min, 1.0 - mu_next),
            index=state_out.index + 1,
        )
        changed = True
        if model.on_barrier_update is not None:
            model.on_barrier_update(state_out.mu)
        if not repeat:
            break
    if changed:
        flt = Filter.fresh(flt.theta_cap)
    return state_out, flt, changed
