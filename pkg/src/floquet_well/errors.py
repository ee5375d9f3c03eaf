"""Exception hierarchy shared by all solver modules."""

from __future__ import annotations


class FloquetWellError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FloquetWellError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConditioningError(FloquetWellError, ArithmeticError):
    """A linear system is singular or too ill-conditioned to trust.

    Attributes
    ----------
    condition : float
        Estimated condition number (``inf`` when exactly singular).
    """

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class PoleError(FloquetWellError, ArithmeticError):
    """A residual was evaluated on (or numerically at) one of its poles."""


class ConvergenceError(FloquetWellError, RuntimeError):
    """An iterative solver stopped without meeting its tolerances.

    Attributes
    ----------
    best : complex
        Iterate with the smallest residual seen.
    residual : float
        ``|f(best)|``.
    """

    def __init__(self, message: str, best: complex, residual: float):
        super().__init__(f"{message}; best iterate {best!r} with |f| = {residual:.3e}")
        self.best = best
        self.residual = residual


class ClassificationError(FloquetWellError):
    """A crossing window could not be classified as direct or avoided."""


class ContinuationError(FloquetWellError):
    """Branch continuation could not take a single step.

    Attributes
    ----------
    branch : Branch
        Whatever was traced before the failure (at least the seed).
    """

    def __init__(self, message: str, branch):
        super().__init__(message)
        self.branch = branch
