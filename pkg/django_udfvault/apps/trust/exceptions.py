"""
Trust store errors
"""
from apps.core.exceptions import UdfVaultError


class TrustError(UdfVaultError):
    """Base class for trust store errors."""


class StorageError(TrustError):
    """A key, identity or rules file cannot be read or written."""


class MalformedKey(TrustError, ValueError):
    """Key material or a key file does not decode."""


class DuplicateKey(TrustError):
    """The same public key is present in more than one place."""


class UnknownKey(TrustError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else ''


class UnknownProfile(TrustError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else ''
