"""Exception hierarchy shared by every numerical module."""

from __future__ import annotations


class AsygeoError(Exception):
    """Base class for all package errors."""


class DomainError(AsygeoError, ValueError):
    """An argument lies outside the domain of the operation."""


class ExpressionError(AsygeoError, ValueError):
    """A profile expression failed to parse or evaluate.

    ``position`` is the zero-based character offset of the offending token.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ToleranceNotMet(AsygeoError):
    """A numerical routine stopped before reaching its tolerance.

    The best available estimate is attached so callers can decide whether to
    accept it.
    """

    def __init__(self, message: str, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class OscillationError(ToleranceNotMet):
    """Partial integrals keep changing sign without settling."""


class ParabolicError(AsygeoError):
    """The requested object does not exist because the capacity vanishes."""


class DegenerateProfileError(AsygeoError, ValueError):
    """A radial test function has zero weighted L^p norm or violates u(R) = 0."""


class InvariantViolation(AsygeoError):
    """A computed value contradicts a bound it is proven to satisfy."""
