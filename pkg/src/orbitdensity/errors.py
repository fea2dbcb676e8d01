"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: usage problems exit 2,
exact-mode theorem violations exit 1, numerical failures exit 3.
"""


class UsageError(ValueError):
    """Invalid argument, configuration value, or precondition violation."""


class DimensionError(UsageError):
    """Matrix or vector dimensions do not match the operation."""


class NotPSDError(ValueError):
    """A matrix required to be positive semidefinite has a genuinely negative eigenvalue."""


class NotRieszError(ValueError):
    """A Gram matrix required to be nonsingular is numerically singular."""


class ResourceLimitError(RuntimeError):
    """An enumeration exceeded its configured element cap."""


class NumericalFailure(RuntimeError):
    """A numerical routine failed to converge or to reach the requested accuracy."""


class AccuracyError(NumericalFailure):
    """Estimated quadrature error exceeds the requested tolerance."""


class DegenerateProbeError(NumericalFailure):
    """Every probe direction is numerically degenerate."""


class OracleInconsistencyError(NumericalFailure):
    """Two independent computations of the same quantity disagree (implementation bug)."""


class TheoremViolationError(RuntimeError):
    """An exactly verifiable assertion failed in exact mode (implementation bug)."""
