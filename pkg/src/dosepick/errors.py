"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "DosepickError",
    "DomainError",
    "ValidationError",
    "InfeasibleDesignError",
    "InsufficientDataError",
    "NotApplicableError",
    "VersionConflictError",
    "UnknownTrialError",
]


class DosepickError(Exception):
    """Base class for package errors."""


class DomainError(DosepickError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ValidationError(DosepickError, ValueError):
    """A domain object violates one of its invariants.

    ``violations`` lists each violated invariant as human-readable text.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleDesignError(DosepickError):
    """No design satisfies the constraints within the search cap."""

    def __init__(self, message: str, best_achieved: float | None = None):
        super().__init__(message)
        self.best_achieved = best_achieved


class InsufficientDataError(DosepickError):
    """A decision was requested without the data needed to make it."""


class NotApplicableError(DosepickError):
    """An operation does not apply to this design (e.g. interim on one-stage)."""


class VersionConflictError(DosepickError):
    """A concurrent write was detected by the trial store's version check."""


class UnknownTrialError(DosepickError, KeyError):
    """No trial with the requested id exists in the store."""
