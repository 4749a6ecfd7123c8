"""Shared exception types."""

from __future__ import annotations


class ConfigError(Exception):
    """Raised for malformed, unknown, or inconsistent configuration input."""


class InfeasibleError(Exception):
    """Raised when a requested operating point violates a hard constraint.

    Carries the names of the violated constraints when known.
    """

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations) if violations else []


class CalibrationError(Exception):
    """Raised when surrogate calibration targets are unusable."""
