"""Exception types raised by the concavity lab.

Input problems are ``ValueError`` subclasses, numerical breakdowns are
``RuntimeError`` subclasses. The CLI maps both to exit code 1.
"""

from __future__ import annotations

from typing import Optional


class InvalidMeasureError(ValueError):
    """Potential parameters that do not give a C^2 strictly convex potential."""

    def __init__(self, message: str, *, eigenvalue: Optional[float] = None) -> None:
        super().__init__(message)
        self.eigenvalue = eigenvalue


class InvalidBodyError(ValueError):
    """Support function that is not the support function of a C^2_+ body."""

    def __init__(
        self,
        message: str,
        *,
        theta: Optional[float] = None,
        value: Optional[float] = None,
    ) -> None:
        super().__init__(message)
        self.theta = theta
        self.value = value


class ResolutionError(ValueError):
    """Discretisation parameters out of bounds or inconsistent with each other."""


class ConfigError(ValueError):
    """Malformed run configuration; the message names the offending field."""

    def __init__(self, message: str, *, field: Optional[str] = None) -> None:
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class SolverError(RuntimeError):
    """Numerical failure: indefinite Galerkin matrix, empty oracle, bad denominator."""

    def __init__(self, message: str, *, smallest_eigenvalue: Optional[float] = None) -> None:
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


__all__ = [
    "ConfigError",
    "InvalidBodyError",
    "InvalidMeasureError",
    "ResolutionError",
    "SolverError",
]
