"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BirkhoffLaxError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(BirkhoffLaxError, ValueError):
    """Input arrays have inconsistent or unsupported shapes."""


class DomainError(BirkhoffLaxError, ValueError):
    """Input is outside the mathematical domain of the operation."""


class ClassificationError(BirkhoffLaxError, ValueError):
    """A diagram quantity that must be an integer is not one."""


class EvaluationError(BirkhoffLaxError, ArithmeticError):
    """A numerical evaluation produced an inconsistent or undefined result."""


class IntegrationError(BirkhoffLaxError, RuntimeError):
    """Time integration could not be completed.

    The partial trajectory accumulated up to the failure is attached as
    ``trajectory`` so callers can inspect the last reached state.
    """

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
