"""
Char-p Classifier Error Types
Version: 1.0
Purpose: Exception hierarchy shared by the field, series, reduction, oracle and CLI layers
"""

from typing import Any, Dict, Optional


class CharpError(Exception):
    """Root of every error raised by the classifier."""

    exit_code = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        payload = {'error': type(self).__name__, 'message': self.message}
        if self.details:
            payload['details'] = self.details
        return payload


class FieldMismatchError(CharpError, ValueError):
    """Operands live in field contexts with no known common embedding."""


class BudgetExceededError(CharpError):
    """A desk-scale cap was hit (extension degree, group size, enumeration size)."""


class ParseError(CharpError, ValueError):
    """Malformed series, element or field text."""

    def __init__(self, message: str, text: str = '', position: int = -1):
        super().__init__(message, {'text': text, 'position': position})
        self.text = text
        self.position = position

    def __str__(self):
        if self.position >= 0:
            return f"{self.message} at position {self.position}"
        return self.message


class PreconditionError(CharpError, ValueError):
    """A mathematical precondition does not hold for the input."""

    exit_code = 1


class TruncationError(PreconditionError):
    """The jet is too short to certify the requested invariant."""


class EngineError(CharpError):
    """The elimination engine could not find a valid step or broke its postcondition."""

    exit_code = 3


class InvariantViolation(CharpError, AssertionError):
    """A verified property failed; details carry the counterexample."""

    exit_code = 3
