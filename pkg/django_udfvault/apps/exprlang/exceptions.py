"""
Expression language errors

Errors raised while reading source carry the character offset of the
offending token.
"""
from typing import Any, Optional

from apps.core.exceptions import UdfVaultError


class ExprError(UdfVaultError):
    """Base class for expression language errors."""

    def __init__(self, message: str = '', offset: Optional[int] = None, **details: Any):
        if offset is not None:
            details['offset'] = offset
        super().__init__(message, **details)
        self.message = message
        self.offset = offset

    def __str__(self) -> str:
        if self.offset is None:
            return self.message
        return f"at offset {self.offset}: {self.message}"


class ExprSyntaxError(ExprError, ValueError):
    """Source does not match the grammar."""


class UnknownIdentifier(ExprError, ValueError):
    """Identifier is neither an input alias, a reserved name nor a function."""


class ArityError(ExprError, ValueError):
    """Function called with the wrong number of arguments."""


class InvalidAlias(ExprError, ValueError):
    """Input alias is duplicated, reserved or not an identifier."""


class BytecodeError(ExprError):
    """Serialized program cannot be loaded."""


class BadMagic(BytecodeError, ValueError):
    pass


class UnsupportedVersion(BytecodeError, ValueError):
    pass


class MalformedBytecode(BytecodeError, ValueError):
    """Truncated stream, operand out of range, or broken stack discipline."""


class ProgramTooLarge(ExprError, ValueError):
    """Constant pool, input table or code does not fit the UXB1 count fields."""


class InputDTypeUnsupported(ExprError, TypeError):
    """Strings and compounds cannot be consumed or produced by expressions."""


class EvaluationCancelled(ExprError):
    """Evaluation stopped because its cancel event was set."""
