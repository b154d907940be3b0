"""Named benchmark registry used by the command line and the tests.

Each entry couples a default spec (horizon, step, physical parameters)
with a builder and an initial-controls rule.  The seed draws the instance
for the random LQ family; for the physics problems it only perturbs the
warm start, the instance itself is fixed by the spec.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from ..ocp import OcpModel
from .acrobot import (
    ACROBOT_DEFAULTS,
    NOMINAL_MU_INIT as ACROBOT_MU_INIT,
    acrobot_initial_controls,
    build_acrobot,
)
from .cartpole import (
    CARTPOLE_DEFAULTS,
    NOMINAL_MU_INIT as CARTPOLE_MU_INIT,
    build_cartpole,
    cartpole_initial_controls,
)
from .lq import build_eqlq
from .pendulum import (
    PENDULUM_DEFAULTS,
    TAU_CAP_DEFAULT,
    build_pendulum,
    pendulum_initial_controls,
)

Array = np.ndarray


@dataclass(frozen=True)
class BenchmarkSpec:
    """Problem family configuration: sizes, step length and parameters."""

    name: str
    horizon: int
    dt: float
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Problem:
    """Registry entry.  solver_settings are per-problem SolverConfig
    overrides (a barrier start matched to the warm start, say) applied
    unless the caller sets the same field explicitly."""

    name: str
    summary: str
    default_spec: BenchmarkSpec
    build: Callable[[BenchmarkSpec, int], OcpModel]
    initial_controls: Callable[[BenchmarkSpec, OcpModel, int], Array]
    solver_settings: Mapping[str, float] = field(default_factory=dict)


def apply_overrides(spec: BenchmarkSpec, overrides: Mapping[str, float]) -> BenchmarkSpec:
    """Return a spec with horizon, dt or named parameters replaced.

    Raises:
        KeyError: for a key that is neither a spec field nor a parameter.
    """
    spec_out = spec
    params = dict(spec.params)
    for key, value in overrides.items():
        if key == "horizon":
            spec_out = replace(spec_out, horizon=int(value))
        elif key == "dt":
            spec_out = replace(spec_out, dt=float(value))
        elif key in params:
            params[key] = float(value)
        else:
            raise KeyError(key)
    return replace(spec_out, params=params)


def _build_eqlq(spec: BenchmarkSpec, seed: int) -> OcpModel:
    p = spec.params
    return build_eqlq(
        seed, horizon=spec.horizon,
        n_x=int(p["n_x"]), n_u=int(p["n_u"]), n_c=int(p["n_c"]),
    )


def _eqlq_start(spec: BenchmarkSpec, model: OcpModel, seed: int) -> Array:
    return np.zeros((model.dims.horizon, model.dims.n_u))


def _pendulum_kwargs(spec: BenchmarkSpec) -> tuple[dict, float | None]:
    params = dict(spec.params)
    cap = params.pop("tau_cap", None)
    return params, cap


def _build_pendulum(spec: BenchmarkSpec, seed: int) -> OcpModel:
    params, cap = _pendulum_kwargs(spec)
    return build_pendulum(spec.horizon, spec.dt, tau_cap=cap, **params)


def _pendulum_start(spec: BenchmarkSpec, model: OcpModel, seed: int) -> Array:
    params, cap = _pendulum_kwargs(spec)
    u = pendulum_initial_controls(model, spec.dt, tau_cap=cap, **params)
    u[:, 0] += 1e-3 * np.random.default_rng(seed).standard_normal(u.shape[0])
    return u


def _build_cartpole(spec: BenchmarkSpec, seed: int) -> OcpModel:
    return build_cartpole(spec.horizon, spec.dt, **spec.params)


def _cartpole_start(spec: BenchmarkSpec, model: OcpModel, seed: int) -> Array:
    u = cartpole_initial_controls(model, spec.dt, **spec.params)
    u[:, 0] += 1e-3 * np.random.default_rng(seed).standard_normal(u.shape[0])
    return u


def _build_acrobot(spec: BenchmarkSpec, seed: int) -> OcpModel:
    return build_acrobot(spec.horizon, spec.dt, **spec.params)


def _acrobot_start(spec: BenchmarkSpec, model: OcpModel, seed: int) -> Array:
    u = acrobot_initial_controls(model, spec.dt, **spec.params)
    u[:, 0] += 1e-3 * np.random.default_rng(seed).standard_normal(u.shape[0])
    return u


PROBLEMS: dict[str, Problem] = {
    "eqlq": Problem(
        name="eqlq",
        summary="random constrained linear-quadratic instance drawn from the seed",
        default_spec=BenchmarkSpec(
            name="eqlq", horizon=5, dt=1.0,
            params={"n_x": 2, "n_u": 2, "n_c": 1},
        ),
        build=_build_eqlq,
        initial_controls=_eqlq_start,
    ),
    "pendulum": Problem(
        name="pendulum",
        summary="pendulum swing-up, integrator in the stage constraints",
        default_spec=BenchmarkSpec(
            name="pendulum", horizon=60, dt=0.05, params=dict(PENDULUM_DEFAULTS),
        ),
        build=_build_pendulum,
        initial_controls=_pendulum_start,
    ),
    "pendulum-capped": Problem(
        name="pendulum-capped",
        summary="pendulum swing-up under a hard torque cap",
        default_spec=BenchmarkSpec(
            name="pendulum-capped", horizon=60, dt=0.05,
            params={**PENDULUM_DEFAULTS, "tau_cap": TAU_CAP_DEFAULT},
        ),
        build=_build_pendulum,
        initial_controls=_pendulum_start,
    ),
    "cartpole": Problem(
        name="cartpole",
        summary="cart-pole swing-up with Coulomb friction at both contacts",
        default_spec=BenchmarkSpec(
            name="cartpole", horizon=50, dt=0.05, params=dict(CARTPOLE_DEFAULTS),
        ),
        build=_build_cartpole,
        initial_controls=_cartpole_start,
        solver_settings={"mu_init": CARTPOLE_MU_INIT},
    ),
    "acrobot": Problem(
        name="acrobot",
        summary="acrobot swing-up with elbow joint limits as contacts",
        default_spec=BenchmarkSpec(
            name="acrobot", horizon=50, dt=0.05, params=dict(ACROBOT_DEFAULTS),
        ),
        build=_build_acrobot,
        initial_controls=_acrobot_start,
        solver_settings={"mu_init": ACROBOT_MU_INIT},
    ),
}


# Per-family physical parameter ranges used by randomize.  Friction
# coefficients span [0.01, 0.3]; masses and lengths vary around their
# defaults.  Families without an entry (the LQ draw is already seeded)
# randomize nothing.
PARAMETER_RANGES: dict[str, dict[str, tuple[float, float]]] = {
    "pendulum": {"mass": (0.5, 1.5), "length": (0.5, 1.5)},
    "pendulum-capped": {"mass": (0.5, 1.5), "length": (0.5, 1.5)},
    "cartpole": {
        "mass_cart": (0.5, 1.5),
        "mass_pole": (0.1, 0.5),
        "length": (0.3, 0.7),
        "mu_cart": (0.01, 0.3),
        "mu_pole": (0.01, 0.3),
    },
    "acrobot": {
        "mass_1": (0.5, 1.5),
        "mass_2": (0.5, 1.5),
        "length_1": (0.7, 1.3),
        "length_2": (0.7, 1.3),
    },
}


def randomize(spec: BenchmarkSpec, k: int, seed: int = 0) -> list[BenchmarkSpec]:
    """Draw k parameter variations of a spec within the declared ranges.

    Draws are taken from one generator seeded with the master seed, so the
    same (spec, k, seed) triple always yields the same list.  Parameters
    without a declared range keep their spec value.
    """
    assert k >= 1
    ranges = PARAMETER_RANGES.get(spec.name, {})
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(k):
        params = dict(spec.params)
        for key, (lo, hi) in sorted(ranges.items()):
            if key in params:
                params[key] = float(rng.uniform(lo, hi))
        out.append(replace(spec, params=params))
    return out


def problem_names() -> list[str]:
    return sorted(PROBLEMS)


def build_instance(
    name: str,
    seed: int = 0,
    overrides: Mapping[str, float] | None = None,
) -> tuple[OcpModel, Array, BenchmarkSpec]:
    """Instantiate a registered problem with its warm start.

    Raises:
        KeyError: unknown problem name or override key.
    """
    if name not in PROBLEMS:
        raise KeyError(name)
    prob = PROBLEMS[name]
    spec = prob.default_spec
    if overrides:
        spec = apply_overrides(spec, overrides)
    model = prob.build(spec, seed)
    u_init = prob.initial_controls(spec, model, seed)
    return model, u_init, spec
