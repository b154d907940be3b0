"""Outer iteration driver and solution-quality instruments."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .backward import RegState, backward_pass
from .barrier import BarrierState, advance_subproblem, perturbed_error
from .errors import IllConditionedError, RegularizationOverflowError
from .forward import Filter, augment_filter, line_search, rollout
from .ocp import (
    Iterate,
    OcpModel,
    evaluate_cost,
    evaluate_lagrangian,
    evaluate_theta,
    optimality_error,
    simulate,
)

Array = np.ndarray

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"
STATUS_LINE_SEARCH = "line_search_failure"
STATUS_ILL_CONDITIONED = "ill_conditioned"
STATUS_REG_OVERFLOW = "regularization_overflow"


@dataclass(frozen=True)
class SolverConfig:
    """Tuning constants; defaults follow the interior-point line-search filter scheme."""

    eps_tol: float = 1e-7
    max_iters: int = 1000
    gamma_theta: float = 1e-5
    gamma_lagr: float = 1e-5
    delta: float = 1.0
    s_theta: float = 1.1
    s_lagr: float = 2.3
    eta_lagr: float = 1e-4
    gamma_min: float = 1e-9
    theta_min_factor: float = 1e-4
    theta_max_factor: float = 1e4
    mu_init: float = 1.0
    kappa_eps: float = 10.0
    kappa_mu: float = 0.2
    theta_mu: float = 1.2
    tau_min: float = 0.99
    delta_w_0: float = 1e-4
    delta_w_min: float = 1e-20
    delta_w_max: float = 1e40
    delta_c_bar: float = 1e-8
    delta_c_exp: float = 0.25
    cond_limit: float = 1e14
    zero_pivot_tol: float = 1e-12
    mask_floor: float = 1e-2
    z_init: float = 1.0
    gauss_newton: bool = False
    keep_iterates: bool = False

    def __post_init__(self) -> None:
        assert self.eps_tol > 0.0
        assert self.max_iters >= 0
        assert 0.0 < self.gamma_theta < 1.0 and 0.0 < self.gamma_lagr < 1.0
        assert self.delta > 0.0
        assert self.s_theta > 1.0
        assert self.s_lagr >= 1.0
        assert 0.0 < self.eta_lagr < 0.5
        assert 0.0 < self.gamma_min < 1.0
        assert self.mu_init > 0.0
        assert self.kappa_eps > 0.0
        assert 0.0 < self.kappa_mu < 1.0
        assert 1.0 < self.theta_mu < 2.0
        assert 0.0 < self.tau_min < 1.0
        assert 0.0 < self.delta_w_min <= self.delta_w_0 <= self.delta_w_max


@dataclass(frozen=True)
class IterationRecord:
    """One outer iteration as logged (and serialized by the CLI)."""

    k: int
    mode: str
    mu: float
    cost: float
    theta: float
    lagrangian: float
    error: float
    gamma: float
    delta_w: float
    m: float
    l_type: bool
    filter_size: int
    trials: int


@dataclass
class SolverReport:
    status: str
    iterate: Iterate
    records: list[IterationRecord]
    wall_time: float
    iterates: Optional[list[Iterate]] = None

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED

    @property
    def iterations(self) -> int:
        return len(self.records)


def _initial_iterate(
    model: OcpModel,
    u_init: Array,
    cfg: SolverConfig,
    mu: float | None,
    phi_init: Optional[Array] = None,
) -> Iterate:
    d = model.dims
    u = np.array(u_init, dtype=float)
    if u.shape != (d.horizon, d.n_u):
        raise ValueError(f"u_init shape {u.shape} != {(d.horizon, d.n_u)}")
    if not np.all(np.isfinite(u)):
        raise ValueError("u_init contains non-finite entries")
    if phi_init is None:
        phi = np.zeros((d.horizon, d.n_c))
    else:
        phi = np.array(phi_init, dtype=float)
        if phi.shape != (d.horizon, d.n_c):
            raise ValueError(f"phi_init shape {phi.shape} != {(d.horizon, d.n_c)}")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi_init contains non-finite entries")
    mask = model.nonneg_mask
    if mu is not None:
        u[:, mask] = np.maximum(u[:, mask], cfg.mask_floor)
    x = simulate(model, u)
    z = np.zeros((d.horizon, d.n_u))
    if mu is not None:
        z[:, mask] = cfg.z_init
    theta = evaluate_theta(model, x, u)
    lagr = evaluate_lagrangian(model, x, u, phi, mu=mu if mu is not None else 0.0)
    return Iterate(
        x=x, u=u, phi=phi,
        lam=np.zeros((d.horizon, d.n_x)), z=z,
        theta=theta, lagrangian=lagr,
    )


def solve(
    model: OcpModel,
    u_init: Array,
    config: SolverConfig | None = None,
    phi_init: Optional[Array] = None,
) -> SolverReport:
    """Run the solver from an open-loop control guess.

    Never raises on numerical failure: aborts are reported through the
    status field.  Masked models start at the barrier weight mu_init with
    masked controls floored away from the boundary and unit bound duals.
    An optional warm start for the stage multipliers may be supplied.
    """
    cfg = config or SolverConfig()
    interior = model.has_bounds
    mu0 = cfg.mu_init if interior else None
    t0 = time.perf_counter()
    if interior and model.on_barrier_update is not None:
        model.on_barrier_update(mu0)
    it = _initial_iterate(model, u_init, cfg, mu0, phi_init)
    theta0 = it.theta
    theta_min = cfg.theta_min_factor * max(1.0, theta0)
    theta_cap = cfg.theta_max_factor * max(1.0, theta0)
    flt = Filter.fresh(theta_cap)
    bar = BarrierState(mu=cfg.mu_init, tau=max(cfg.tau_min, 1.0 - cfg.mu_init)) if interior else None
    reg = RegState()
    records: list[IterationRecord] = []
    saved: Optional[list[Iterate]] = [] if cfg.keep_iterates else None
    status = STATUS_MAX_ITERS

    k = 0
    while True:
        try:
            gains, m, reg = backward_pass(
                model, it, reg, cfg, mu=bar.mu if interior else None
            )
        except RegularizationOverflowError:
            status = STATUS_REG_OVERFLOW
            break
        except IllConditionedError:
            status = STATUS_ILL_CONDITIONED
            break
        if interior:
            err = perturbed_error(model, it, 0.0)
        else:
            err = optimality_error(model, it)
        converged = err < cfg.eps_tol
        if interior and not converged:
            bar, flt, changed = advance_subproblem(
                model, it, bar, flt, cfg, repeat=(k == 0)
            )
            if changed:
                it.theta = evaluate_theta(model, it.x, it.u)
                it.lagrangian = evaluate_lagrangian(model, it.x, it.u, it.phi, mu=bar.mu)
                # gains from the old subproblem are stale; redo the sweep
                continue

        def record(gamma: float, l_type: bool, trials: int) -> IterationRecord:
            return IterationRecord(
                k=k,
                mode="ip" if interior else "eq",
                mu=bar.mu if interior else 0.0,
                cost=evaluate_cost(model, it.x, it.u),
                theta=it.theta,
                lagrangian=it.lagrangian,
                error=err,
                gamma=gamma,
                delta_w=float(np.max(gains.delta_w)),
                m=m,
                l_type=l_type,
                filter_size=len(flt),
                trials=trials,
            )

        if saved is not None:
            saved.append(it.copy())
        if converged:
            status = STATUS_CONVERGED
            records.append(record(0.0, False, 0))
            break
        if k >= cfg.max_iters:
            status = STATUS_MAX_ITERS
            records.append(record(0.0, False, 0))
            break
        outcome = line_search(
            model, it, gains, m, flt, cfg, theta_min,
            mu=bar.mu if interior else None,
            tau=bar.tau if interior else None,
        )
        if not outcome.accepted:
            status = STATUS_LINE_SEARCH
            records.append(record(0.0, False, len(outcome.rejections)))
            break
        prev_theta, prev_lagr = it.theta, it.lagrangian
        rec = record(outcome.gamma, outcome.is_l_type, len(outcome.rejections) + 1)
        it = outcome.trial.iterate
        if not outcome.is_l_type:
            flt = augment_filter(flt, prev_theta, prev_lagr, cfg.gamma_theta, cfg.gamma_lagr)
            rec = replace(rec, filter_size=len(flt))
        records.append(rec)
        k += 1

    return SolverReport(
        status=status,
        iterate=it,
        records=records,
        wall_time=time.perf_counter() - t0,
        iterates=saved,
    )


@dataclass(frozen=True)
class ProbeRow:
    """One radius of the local contraction probe."""

    radius: float
    err_before: float
    err_after: float
    ok: bool


def local_rate_probe(
    model: OcpModel,
    solution: Iterate,
    radii: list[float] | tuple[float, ...],
    config: SolverConfig | None = None,
    seed: int = 0,
) -> list[ProbeRow]:
    """Measure one-step error contraction around a converged solution.

    Controls are perturbed along a fixed unit direction at each radius, the
    states re-rolled, and a single backward/forward step at full step size
    applied.  Errors are 2-norms of the stacked (x, u, phi) deviation from
    the solution.  Rows where the step aborts, diverges or fails to
    contract are flagged not-ok.
    """
    if model.has_bounds:
        raise ValueError("probe supports equality-constrained models only")
    cfg = config or SolverConfig()
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(solution.u.shape)
    direction /= np.linalg.norm(direction)

    def dist(it: Iterate) -> float:
        return float(np.sqrt(
            np.sum((it.x - solution.x) ** 2)
            + np.sum((it.u - solution.u) ** 2)
            + np.sum((it.phi - solution.phi) ** 2)
        ))

    rows: list[ProbeRow] = []
    for radius in radii:
        u_p = solution.u + radius * direction
        x_p = simulate(model, u_p)
        it_p = Iterate(
            x=x_p, u=u_p, phi=solution.phi.copy(), lam=solution.lam.copy(),
            z=np.zeros_like(solution.z),
            theta=evaluate_theta(model, x_p, u_p),
            lagrangian=evaluate_lagrangian(model, x_p, u_p, solution.phi),
        )
        before = dist(it_p)
        try:
            gains, _, _ = backward_pass(model, it_p, RegState(), cfg)
        except (RegularizationOverflowError, IllConditionedError):
            rows.append(ProbeRow(radius, before, np.inf, False))
            continue
        trial = rollout(model, it_p, gains, 1.0)
        if not trial.finite:
            rows.append(ProbeRow(radius, before, np.inf, False))
            continue
        after = dist(trial.iterate)
        ok = after < before or before <= 10.0 * cfg.eps_tol
        rows.append(ProbeRow(radius, before, after, ok))
    return rows


def contraction_slope(rows: list[ProbeRow]) -> float:
    """Log-log least-squares slope of err_after vs err_before over ok rows."""
    pts = [(r.err_before, r.err_after) for r in rows
           if r.ok and r.err_before > 0.0 and r.err_after > 0.0]
    if len(pts) < 2:
        raise ValueError("need at least two usable probe rows to fit a slope")
    logs = np.log(np.array(pts))
    slope = np.polyfit(logs[:, 0], logs[:, 1], 1)[0]
    return float(slope)
