"""Exception hierarchy shared by every module.

The CLI maps these onto process exit codes, so each failure class has a
single home here.
"""

from __future__ import annotations


class TimeMarchError(Exception):
    """Base class for all package errors."""


class InputError(TimeMarchError, ValueError):
    """Malformed or non-finite input."""


class PreconditionError(TimeMarchError, ValueError):
    """A documented precondition of an operation does not hold."""


class DimensionError(InputError):
    """Matrix shape mismatch or dimension above the supported cap."""


class SubnormalizationError(PreconditionError):
    """Target norm exceeds the requested subnormalization."""


class CapViolationError(PreconditionError):
    """A polynomial exceeds its declared magnitude cap on [-1, 1]."""


class ConditioningError(PreconditionError):
    """A singular value falls below the inversion threshold."""


class DomainError(InputError):
    """Evaluation point outside [-1, 1]."""


class ConvergenceError(TimeMarchError, ArithmeticError):
    """An iterative routine hit its refinement cap.

    ``last`` and ``previous`` hold the two final iterates so callers can
    judge how far from convergence the routine was.
    """

    def __init__(self, message, last=None, previous=None):
        super().__init__(message)
        self.last = last
        self.previous = previous


class InfeasibleError(TimeMarchError, ArithmeticError):
    """An optimisation problem has no feasible point."""


class ConfigError(InputError):
    """Configuration text could not be parsed or validated."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
