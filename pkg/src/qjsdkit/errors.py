"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the command line
front end reports in its JSON error payload.
"""

from __future__ import annotations

from typing import Any


class QJSDError(Exception):
    """Base class for all domain errors raised by the package."""

    code = "domain-error"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"error": self.code, "message": str(self)}
        for key, value in self.details.items():
            payload[key] = value
        return payload


class InvalidOperatorError(QJSDError):
    code = "invalid-operator"


class DimensionMismatchError(QJSDError):
    code = "dimension-mismatch"


class CommutativityError(QJSDError):
    code = "commutativity-violation"


class NonFiniteValueError(QJSDError):
    code = "non-finite-value"


class HashingSpecError(QJSDError):
    code = "invalid-hashing"


class ExpansionBudgetError(QJSDError):
    """Spectral expansion of a hashing would exceed the product budget."""

    code = "resource-exhausted"


class AxisError(QJSDError):
    code = "axis-out-of-range"


class KernelMassError(QJSDError):
    code = "kernel-mass"


class GridMismatchError(QJSDError):
    code = "grid-mismatch"


class NormalizationError(QJSDError):
    code = "normalization"


class DegenerateConditioningError(QJSDError):
    code = "degenerate-conditioning"


class DegeneratePostSelectionError(QJSDError):
    code = "degenerate-post-selection"

    def __init__(self, message: str, probability: float, **details: Any) -> None:
        super().__init__(message, probability=probability, **details)
        self.probability = probability


class SchemaError(QJSDError):
    """Input file does not match its JSON schema; ``pointer`` locates the field."""

    code = "schema-violation"

    def __init__(self, message: str, pointer: str = "", **details: Any) -> None:
        super().__init__(message, pointer=pointer, **details)
        self.pointer = pointer


class InvariantViolationError(QJSDError):
    """Loaded data parses but violates a type invariant by ``residual``."""

    code = "invariant-violation"

    def __init__(self, message: str, residual: float, **details: Any) -> None:
        super().__init__(message, residual=residual, **details)
        self.residual = residual


class UnreadableFileError(QJSDError):
    code = "unreadable-file"
