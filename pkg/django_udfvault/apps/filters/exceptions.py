"""
Filter pipeline errors
"""
from apps.core.exceptions import UdfVaultError


class FilterError(UdfVaultError):
    """Base class for filter pipeline errors."""


class UnknownFilter(FilterError, ValueError):
    """Filter id is not in the registry."""


class InvalidFilterParams(FilterError, ValueError):
    """Filter chain is malformed (duplicate ids, bad parameters)."""


class FilterFailure(FilterError):
    """A filter could not process its input on the write path."""


class CorruptStream(FilterError):
    """Stored bytes cannot be inverted by the read path."""


class LengthMismatch(FilterError):
    """Inverted chunk length differs from the expected length."""
