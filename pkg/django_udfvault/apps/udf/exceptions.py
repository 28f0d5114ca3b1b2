"""
UDF engine errors
"""
from typing import Any, Optional

from apps.container.exceptions import DuplicatePath
from apps.core.exceptions import BudgetExceeded, UdfVaultError
from apps.runtime.exceptions import Timeout

__all__ = [
    'BudgetExceeded',
    'CompileError',
    'CyclicDependency',
    'DuplicateBackend',
    'DuplicatePath',
    'MalformedHeader',
    'MissingInput',
    'NotAUdfDataset',
    'SignatureInvalid',
    'Timeout',
    'TrustViolation',
    'UdfError',
    'UdfRuntimeError',
    'UnknownBackend',
    'UnknownHostedFunction',
]


class UdfError(UdfVaultError):
    """Base class for UDF engine errors."""


class CompileError(UdfError, ValueError):
    """Backend rejected the source; the message is the backend's diagnostic."""

    def __init__(self, message: str = '', offset: Optional[int] = None, **details: Any):
        if offset is not None:
            details['offset'] = offset
        super().__init__(message, **details)
        self.offset = offset


class MissingInput(UdfError, ValueError):
    """An input path does not name a dataset in the container."""


class UnknownBackend(UdfError, ValueError):
    pass


class DuplicateBackend(UdfError, ValueError):
    pass


class UnknownHostedFunction(UdfError):
    """Hosted UDF names a function the host never registered."""


class MalformedHeader(UdfError, ValueError):
    """Payload header is not valid UDF metadata."""


class NotAUdfDataset(UdfError, ValueError):
    pass


class SignatureInvalid(UdfError):
    """Payload signature does not verify under its embedded public key."""


class TrustViolation(UdfError):
    """Backend needs grants the signer's trust profile does not give."""


class UdfRuntimeError(UdfError):
    """The UDF failed while executing."""


class CyclicDependency(UdfError):
    """UDF inputs lead back to the dataset being computed."""
