"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class NonConvergent(ArithmeticError):
    """A series or iterative evaluation hit its iteration cap before tolerance."""


class DegenerateNetwork(ZeroDivisionError):
    """The network consumes no power, so energy efficiency is undefined."""


class BracketFailure(RuntimeError):
    """No sign change of a stationary gap was found inside the search range."""


class MaxIterations(RuntimeError):
    """The alternating optimizer ran out of iterations.

    The best point seen so far is attached as ``best`` (an ``OptimumReport``).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class EmptyRealization(RuntimeError):
    """Every resampling attempt produced a window without base stations."""


class ConfigError(ValueError):
    """Malformed experiment configuration; the message names the field."""


class InsufficientSamples(UserWarning):
    """A Monte Carlo confidence half-width exceeds 10% of its mean."""
