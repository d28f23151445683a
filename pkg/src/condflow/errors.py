"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "CondflowError",
    "ConfigError",
    "NumericFailure",
    "EvalDomainError",
    "QuadratureError",
    "NeedLongerHorizonError",
    "InsufficientSamplesError",
]


class CondflowError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(CondflowError):
    """Invalid configuration file or command-line arguments."""


class NumericFailure(CondflowError):
    """A numeric procedure could not produce a trustworthy result."""


class EvalDomainError(NumericFailure):
    """Coefficient or functional evaluation left its domain (division by
    zero, log/sqrt of a nonpositive value, non-finite result)."""


class QuadratureError(NumericFailure):
    """Scale-function quadrature failed to converge; carries the last
    partial sums for diagnosis."""

    def __init__(self, message: str, partial_sums: list[float] | None = None):
        super().__init__(message)
        self.partial_sums = partial_sums or []


class NeedLongerHorizonError(NumericFailure):
    """Too many paths resolved neither stopping level before the horizon,
    so the conditioning event was not realized numerically."""

    def __init__(self, message: str, unresolved_fraction: float):
        super().__init__(message)
        self.unresolved_fraction = unresolved_fraction


class InsufficientSamplesError(NumericFailure):
    """A statistical comparison was requested with too few samples."""
