"""
Container errors
"""
from apps.core.exceptions import ShapeMismatch, UdfVaultError

__all__ = [
    'ContainerError',
    'CorruptChunk',
    'CorruptContainer',
    'DTypeError',
    'DuplicatePath',
    'InvalidLayout',
    'InvalidPath',
    'NotFound',
    'ShapeMismatch',
]


class ContainerError(UdfVaultError):
    """Base class for container errors."""


class DuplicatePath(ContainerError, ValueError):
    """Path already names a group or dataset."""


class NotFound(ContainerError, KeyError):
    """Path does not exist in the container."""

    def __str__(self) -> str:
        # KeyError would otherwise repr() the message
        return self.args[0] if self.args else ''


class InvalidPath(ContainerError, ValueError):
    """Path is not absolute or has empty components."""


class DTypeError(ContainerError, ValueError):
    """Data type descriptor violates its invariants."""


class CorruptChunk(ContainerError):
    """A stored chunk could not be decoded through the filter chain."""


class CorruptContainer(ContainerError):
    """Header, footer or index is not a valid SDC1 structure."""


class InvalidLayout(ContainerError, ValueError):
    """Chunk shape does not fit the dataset, or filters need a chunked layout."""
