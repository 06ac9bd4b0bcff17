"""Exception hierarchy shared by all modules."""


class SeaError(Exception):
    """Base class for every error raised by seaqt."""


class DimensionMismatch(SeaError, ValueError):
    pass


class NotAState(SeaError, ValueError):
    """Input is not a valid density operator (or Bloch vector)."""


class DegenerateConstraints(SeaError):
    """Constraint Gram matrix is singular even after dropping dependent rows."""


class StepRejected(SeaError):
    pass


class KernelViolation(SeaError):
    pass


class MaxStepsExceeded(SeaError):
    pass


class Infeasible(SeaError, ValueError):
    """Requested mean values cannot be attained."""


class DomainError(SeaError, ValueError):
    pass


class SingularBasis(SeaError):
    pass


class BadIndexSet(SeaError, ValueError):
    pass


class ConfigError(SeaError, ValueError):
    pass
