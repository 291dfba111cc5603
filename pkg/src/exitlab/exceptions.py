"""Exception hierarchy shared by every exitlab module."""

from __future__ import annotations


class ExitLabError(Exception):
    """Base class for all library errors."""


class DomainError(ExitLabError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class PoleError(ExitLabError, ArithmeticError):
    """A Pochhammer symbol in a denominator vanished."""


class NonConvergence(ExitLabError, ArithmeticError):
    """A series or iteration did not converge within its budget.

    Attributes
    ----------
    partial : complex or float or None
        Last partial value, when one is available.
    error : float or None
        Error estimate attached to ``partial``.
    """

    def __init__(self, message, partial=None, error=None):
        super().__init__(message)
        self.partial = partial
        self.error = error


class TailUnbounded(ExitLabError):
    """A forward Laplace transform was requested without a usable tail bound."""


class NumericalBlowup(ExitLabError, ArithmeticError):
    """Catastrophic cancellation destroyed every significant digit."""


class ClosedFormUnavailable(ExitLabError):
    """No closed-form density exists for the requested law or parameters."""


class GridMismatch(ExitLabError, ValueError):
    """Two sampled curves do not share the same grid."""


class DivergentCumulant(ExitLabError, ArithmeticError):
    """The cumulant transform diverges at the requested argument."""


class MarginalUnavailable(ExitLabError):
    """No stable marginal density is available for a subordinator law."""


class BudgetExceeded(ExitLabError):
    """A quadrature driver exhausted its evaluation budget."""

    def __init__(self, message, partial=None, bound=None):
        super().__init__(message)
        self.partial = partial
        self.bound = bound


class ParseError(ExitLabError, ValueError):
    """Malformed input text (spec strings, CSV files, grids)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptySeries(ExitLabError, ValueError):
    """A price file contained no observations."""


class DegenerateMoments(ExitLabError, ArithmeticError):
    """Sample moments do not identify the requested parameters."""


class TrivialExit(Exception):
    """Raised for barriers at or below the starting point.

    Every exit time is identically zero in that case, so this is a signal
    rather than an error and deliberately does not derive from
    :class:`ExitLabError`.
    """
