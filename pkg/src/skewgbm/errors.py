"""Exception types shared across the package."""


class SkewGbmError(Exception):
    """Base class for all package errors."""


class AssumptionViolated(SkewGbmError, ValueError):
    """Raised when r <= b: the value function is identically +infinity."""


class DegenerateBeta(SkewGbmError, ValueError):
    """Raised for beta == 0, which is plain geometric Brownian motion.

    Use :func:`skewgbm.model.classical_perpetual_call` instead.
    """


class DomainError(SkewGbmError, ValueError):
    """An argument lies outside the domain on which a function is defined."""


class CaseMismatch(SkewGbmError, ValueError):
    """An operation was requested for a parameter case it does not apply to."""


class BracketFailure(SkewGbmError, RuntimeError):
    """No sign change could be located for a bracketed root solve."""


class NonConvergence(SkewGbmError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
