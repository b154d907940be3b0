"""Benchmark problem families and the direct LQ cross-check solver."""

from .acrobot import (
    ACROBOT_DEFAULTS,
    acrobot_initial_controls,
    build_acrobot,
    build_acrobot_plain,
)
from .cartpole import (
    CARTPOLE_DEFAULTS,
    build_cartpole,
    build_cartpole_plain,
    cartpole_complementarity,
    cartpole_initial_controls,
)
from .lq import (
    OracleDegenerateError,
    StackedSolution,
    build_eqlq,
    make_lq_model,
    stacked_kkt_oracle,
)
from .pendulum import (
    PENDULUM_DEFAULTS,
    TAU_CAP_DEFAULT,
    build_pendulum,
    pendulum_initial_controls,
)
from .specs import (
    PARAMETER_RANGES,
    PROBLEMS,
    BenchmarkSpec,
    Problem,
    apply_overrides,
    build_instance,
    problem_names,
    randomize,
)
from .symbolic import build_symbolic_model, discrete_el_rows

__all__ = [
    "ACROBOT_DEFAULTS",
    "BenchmarkSpec",
    "CARTPOLE_DEFAULTS",
    "OracleDegenerateError",
    "PARAMETER_RANGES",
    "PENDULUM_DEFAULTS",
    "PROBLEMS",
    "Problem",
    "StackedSolution",
    "TAU_CAP_DEFAULT",
    "acrobot_initial_controls",
    "apply_overrides",
    "build_acrobot",
    "build_acrobot_plain",
    "build_cartpole",
    "build_cartpole_plain",
    "build_eqlq",
    "build_instance",
    "build_pendulum",
    "build_symbolic_model",
    "cartpole_complementarity",
    "cartpole_initial_controls",
    "discrete_el_rows",
    "make_lq_model",
    "pendulum_initial_controls",
    "problem_names",
    "randomize",
    "stacked_kkt_oracle",
]
