"""Semantic exception hierarchy shared by all modules."""


class IcFadingError(Exception):
    """Base class for library errors."""


class DomainError(IcFadingError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class BracketError(IcFadingError, ValueError):
    """Root bracket endpoints do not straddle a sign change."""


class AccuracyError(IcFadingError, ArithmeticError):
    """A numeric procedure did not reach the requested tolerance.

    Carries the best available estimate so callers can degrade gracefully.
    """

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class MomentDivergenceError(IcFadingError, ArithmeticError):
    """A required distribution moment diverges; names the offending moment."""

    def __init__(self, message, moment=None):
        super().__init__(message)
        self.moment = moment


class NonConvergenceError(IcFadingError, ArithmeticError):
    """An iterative truncation rule was not satisfied; carries the partial result."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConstraintError(IcFadingError, ValueError):
    """A structural constraint (e.g. antenna ordering t <= r) is violated."""


class AccuracyWarning(UserWarning):
    """Raised (as a warning) when guarded evaluations exceed their budget."""
