"""
Core exception hierarchy for udfvault

Every operational failure raised by a service derives from UdfVaultError so
callers (the CLI in particular) can tell operational errors apart from
programming errors. The error name reported to users is the class name.
"""
from typing import Any, Dict


class UdfVaultError(Exception):
    """Base class for all udfvault operational errors."""

    def __init__(self, message: str = '', **details: Any):
        super().__init__(message)
        self.details: Dict[str, Any] = details

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return {
            'error': self.code,
            'message': str(self),
            'details': self.details,
        }


class ShapeMismatch(UdfVaultError, ValueError):
    """Buffer length or extent does not agree with the declared shape."""


class BudgetExceeded(UdfVaultError):
    """Static cost of a program exceeds the instruction budget."""
