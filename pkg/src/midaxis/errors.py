"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2,
ResourceLimitError -> 3, everything else numerical -> 4.
"""

from __future__ import annotations


class MidaxisError(Exception):
    """Base class for all package errors."""


class DomainError(MidaxisError, ValueError):
    """Argument outside the mathematical domain of a special function."""


class OutOfRegimeError(MidaxisError):
    """State too far from the separatrix for the near-separatrix formulas."""


class IntegrationError(MidaxisError):
    """ODE integration failed (step-size underflow or conservation breach)."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class GridError(MidaxisError):
    """A user-supplied grid is too narrow or otherwise inadequate."""


class ResourceLimitError(MidaxisError):
    """A requested computation exceeds a configured resource limit."""

    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class ConfigError(MidaxisError):
    """Invalid run configuration."""


class CacheError(MidaxisError):
    """Spectrum cache record is corrupted or incompatible."""
