"""Exception hierarchy shared by all modules."""


class VolsweepError(Exception):
    """Base class for all library errors."""


class DomainError(VolsweepError):
    """Input outside the domain of an operation (time outside horizon, infeasible start)."""


class DataMissingError(VolsweepError):
    """An operation needs optional data (growth/Lipschitz functions, set constants) that was not supplied."""


class EvaluationError(VolsweepError):
    """A user-supplied function produced non-finite values, or a quadrature could not be evaluated."""


class ReachExceededError(VolsweepError):
    """Projection requested at a distance where nearest points are no longer guaranteed unique."""


class ProjectionFailureError(VolsweepError):
    """The inner projection solver did not converge within its iteration budget."""


class StepTooCoarseError(VolsweepError):
    """A time step would drift farther than the projection uniqueness tube allows; use a finer grid."""


class DegenerateInputError(VolsweepError):
    """Inputs make the requested quantity undefined (e.g. a stability ratio with identical starts)."""


class InvalidCircuitError(VolsweepError):
    """Circuit parameters violate their invariants (vanishing capacitance, nonpositive inductance)."""


class ConfigError(VolsweepError):
    """A problem configuration file failed to parse or validate."""

    def __init__(self, message: str, *, parse: bool = False):
        super().__init__(message)
        self.parse = parse
