"""Exception hierarchy shared by every module."""

from __future__ import annotations


class GaussFracError(Exception):
    """Base class for all package errors."""


class DomainError(GaussFracError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class UnsupportedShapeError(GaussFracError):
    """An exact formula was requested for a set family without one."""


class SingularityError(GaussFracError):
    """Evaluation requested exactly on a kernel singularity (x = y)."""


class DivergenceError(GaussFracError):
    """The requested quantity is a divergent integral (e.g. radial kernel at r = 0)."""


class NonConvergenceError(GaussFracError, RuntimeError):
    """A quadrature exhausted its budget before reaching tolerance.

    Carries the best available estimate so callers can decide whether to
    degrade gracefully; nothing in this package degrades silently.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ValidationError(GaussFracError, ValueError):
    """An experiment configuration failed schema validation."""
