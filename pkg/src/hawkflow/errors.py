"""Exception hierarchy shared by all hawkflow modules."""


class HawkflowError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HawkflowError, ValueError):
    """An argument lies outside the domain of an operation."""


class HorizonError(DomainError):
    """A profile would contain a horizon (2m(r) >= r) inside the grid."""


class NonPositiveCurvatureError(DomainError):
    """Initial data violates the positive scalar curvature hypothesis."""


class StabilityError(HawkflowError, ArithmeticError):
    """A time step produced non-finite or non-positive metric values."""


class ConvergenceError(HawkflowError, ArithmeticError):
    """The Newton iteration of an implicit step did not converge."""


class SingularSpeedError(HawkflowError, ArithmeticError):
    """The speed H/R is undefined because |R| fell below the guard."""


class ConfigError(HawkflowError, ValueError):
    """Invalid run configuration. ``key`` names the offending dotted path."""

    def __init__(self, key, reason):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class IoError(HawkflowError, OSError):
    """Writing an output artifact failed."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"{path}: {reason}")
