"""Constrained trajectory optimizer with a filter line search.

Solves discrete-time optimal control problems with nonlinear stage
equality constraints by stagewise Newton steps on the constrained
problem, accepted through a line-search filter.  Elementwise control
nonnegativity is handled by a primal-dual log-barrier continuation.
"""

from .errors import (
    FilterDdpError,
    IllConditionedError,
    RegularizationOverflowError,
    SingularFactorError,
    SolverAbort,
)
from .linalg import SymIndefFactor, contract_first, ldlt_factor, ldlt_solve
from .ocp import (
    Dims,
    Iterate,
    KktResiduals,
    OcpModel,
    derivative_check,
    evaluate_cost,
    evaluate_lagrangian,
    evaluate_theta,
    kkt_residuals,
    optimality_error,
    simulate,
)
from .barrier import BarrierState, perturbed_error, update_mu
from .solver import (
    STATUS_CONVERGED,
    STATUS_ILL_CONDITIONED,
    STATUS_LINE_SEARCH,
    STATUS_MAX_ITERS,
    STATUS_REG_OVERFLOW,
    IterationRecord,
    ProbeRow,
    SolverConfig,
    SolverReport,
    contraction_slope,
    local_rate_probe,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "BarrierState",
    "Dims",
    "FilterDdpError",
    "IllConditionedError",
    "IterationRecord",
    "Iterate",
    "KktResiduals",
    "OcpModel",
    "ProbeRow",
    "RegularizationOverflowError",
    "STATUS_CONVERGED",
    "STATUS_ILL_CONDITIONED",
    "STATUS_LINE_SEARCH",
    "STATUS_MAX_ITERS",
    "STATUS_REG_OVERFLOW",
    "SingularFactorError",
    "SolverAbort",
    "SolverConfig",
    "SolverReport",
    "SymIndefFactor",
    "contract_first",
    "contraction_slope",
    "derivative_check",
    "evaluate_cost",
    "evaluate_lagrangian",
    "evaluate_theta",
    "kkt_residuals",
    "ldlt_factor",
    "ldlt_solve",
    "local_rate_probe",
    "optimality_error",
    "perturbed_error",
    "simulate",
    "solve",
    "update_mu",
    "__version__",
]
