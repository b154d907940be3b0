"""Exception types shared across the solver."""


class FilterDdpError(Exception):
    """Base class for solver-specific errors."""


class SingularFactorError(FilterDdpError):
    """A factorization with zero pivots was asked to solve a system."""


class SolverAbort(FilterDdpError):
    """Unrecoverable numerical failure inside an iteration.

    Instances are caught by the driver and converted into a report status;
    they never escape ``solve``.
    """


class RegularizationOverflowError(SolverAbort):
    """Primal regularization exceeded its cap without fixing the inertia."""


class IllConditionedError(SolverAbort):
    """A stage system stayed too ill conditioned after inertia correction."""
