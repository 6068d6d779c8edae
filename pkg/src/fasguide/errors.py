"""Exception types raised by the solvers."""

from __future__ import annotations


class FasguideError(Exception):
    """Base class for all package errors."""


class ConfigError(FasguideError, ValueError):
    """Invalid or unreadable configuration."""


class ResolutionError(FasguideError):
    """A grid or quadrature step is too coarse for the requested accuracy."""


class CutoffSingularityError(ResolutionError):
    """Group velocity requested at (or numerically at) a cutoff where dN/dk vanishes."""


class ConvergenceError(FasguideError):
    """An iterative solver failed to converge.

    ``last_good`` holds the last parameter value (frequency, seed, ...) at
    which the iteration was still healthy, when that is meaningful.
    """

    def __init__(self, message: str, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class BranchPointCollision(ConvergenceError):
    """A continuation path ran into (or too close to) a branch point."""

    def __init__(self, message: str, omega=None, k=None, nearest=None):
        super().__init__(message, last_good=omega)
        self.omega = omega
        self.k = k
        self.nearest = nearest


class AmbiguityError(FasguideError):
    """Two candidate roots could not be told apart by the selection rule."""

    def __init__(self, message: str, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class FasNotFound(FasguideError):
    """No first-arriving-signal pulse above the noise floor in the search window."""
