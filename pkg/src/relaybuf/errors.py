"""Exception hierarchy shared by all relaybuf modules."""


class RelaybufError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RelaybufError, ValueError):
    """Invalid scenario configuration or argument."""


class DomainError(RelaybufError, ValueError):
    """Argument outside the mathematical domain of a function."""


class StabilityError(RelaybufError):
    """Operation requires a stable buffer (phi > 1) but got an unstable one."""


class ConsistencyError(RelaybufError, ValueError):
    """Inputs that are individually valid but mutually inconsistent."""


class QuadratureError(RelaybufError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance.

    The best available estimate and its error bound are kept on the
    exception so callers can decide whether to use them anyway.
    """

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
