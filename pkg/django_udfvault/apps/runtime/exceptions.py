"""
Runtime errors raised to or around executing UDFs
"""
from apps.core.exceptions import UdfVaultError


class UdfExecutionError(UdfVaultError):
    """Base class for runtime errors."""


class UnknownName(UdfExecutionError, KeyError):
    """Name is neither a declared input nor the output dataset."""

    def __str__(self) -> str:
        return self.args[0] if self.args else ''


class OutOfBounds(UdfExecutionError, IndexError):
    pass


class StringTooLong(UdfExecutionError, ValueError):
    """Encoded text is longer than the fixed-length target."""


class VarStringWriteUnsupported(UdfExecutionError, TypeError):
    """Only fixed-length string targets can be written."""


class CapabilityDenied(UdfExecutionError, PermissionError):
    """Resource access not granted by the trust profile."""


class NameCollision(UdfExecutionError, ValueError):
    """Two compound members sanitize to the same view name."""


class InvalidMemberName(UdfExecutionError, ValueError):
    """Compound member name sanitizes to an empty string."""


class Timeout(UdfExecutionError):
    """Execution ran past the wall-clock limit and was terminated."""


class MemoryCapExceeded(UdfExecutionError):
    """Output plus working set would exceed the memory cap."""


class UdfPanic(UdfExecutionError):
    """The UDF raised an unexpected exception."""
