"""Exception hierarchy for manifold_ar."""

from typing import Optional


class ManifoldARError(Exception):
    """Base class for all library errors."""


class InvalidInputError(ManifoldARError, ValueError):
    """Non-finite or malformed numerical input."""


class DimensionError(InvalidInputError):
    """Matrix sizes do not fit the requested operation."""


class NotInSpecialOrthogonalError(InvalidInputError):
    """A matrix with negative determinant was passed where SO(n) is required."""


class InvalidTangentError(InvalidInputError):
    """A Stiefel tangent vector fails the tangency condition."""


class BranchAmbiguityError(ManifoldARError):
    """A rotation angle sits at pi, where the principal logarithm is not unique."""


class OutOfChartError(ManifoldARError):
    """Two points are too far apart for the approximate logarithm."""

    def __init__(self, message: str, step: Optional[int] = None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class DegenerateDirectionError(ManifoldARError):
    """Gram-Schmidt removed (almost) all of a search direction."""

    def __init__(self, message: str, residual_norm: float):
        super().__init__(message)
        self.residual_norm = residual_norm


class LineSearchError(ManifoldARError):
    """The line-search objective returned a non-finite value."""

    def __init__(self, tau: float, value: float):
        super().__init__(f"Line search objective is {value} at tau={tau!r}")
        self.tau = tau
        self.value = value


class NonConvergenceError(ManifoldARError):
    """An iteration ran out of budget before reaching its tolerance."""


class InsufficientDataError(ManifoldARError):
    """Too few distinct values to fit a slope."""


class ConfigError(ManifoldARError):
    """Invalid application or sweep configuration."""
