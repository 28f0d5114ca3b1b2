"""
Ed25519 keys, key files and detached signatures

Key file (JSON):

    {"algorithm": "Ed25519", "email": "...", "name": "...", "public_key": "<base64>"}

The owner name and email are advisory; only the public key identifies a signer.
"""
import base64
import binascii
import getpass
import hashlib
import json
import logging
import os
import socket
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from apps.core.serialization import canonical_json

from ..exceptions import MalformedKey, StorageError

logger = logging.getLogger(__name__)

ALGORITHM = 'Ed25519'
PUBLIC_KEY_SIZE = 32
SIGNATURE_SIZE = 64
PRIVATE_KEY_FILE = 'private_key.pem'
PUBLIC_KEY_FILE = 'public_key.json'


def key_id_for(public_key: bytes) -> str:
    """First 16 hex digits of SHA-256 over the raw public key."""
    return hashlib.sha256(public_key).hexdigest()[:16]


def default_owner() -> Tuple[str, str]:
    try:
        login = getpass.getuser()
    except (KeyError, OSError):
        login = 'udfvault'
    return login, f'{login}@{socket.gethostname()}'


def raw_public_key(key: Union[Ed25519PublicKey, Ed25519PrivateKey]) -> bytes:
    if isinstance(key, Ed25519PrivateKey):
        key = key.public_key()
    return key.public_bytes(
        encoding=serialization.Encoding.Raw, format=serialization.PublicFormat.Raw
    )


def load_public_key(public_key: Union[bytes, Ed25519PublicKey]) -> Ed25519PublicKey:
    """
    Raises:
        MalformedKey: not 32 bytes of Ed25519 key material
    """
    if isinstance(public_key, Ed25519PublicKey):
        return public_key
    if len(public_key) != PUBLIC_KEY_SIZE:
        raise MalformedKey(
            f"Ed25519 public keys are {PUBLIC_KEY_SIZE} bytes, got {len(public_key)}"
        )
    try:
        return Ed25519PublicKey.from_public_bytes(bytes(public_key))
    except ValueError as exc:
        raise MalformedKey(f"Invalid Ed25519 public key: {exc}") from exc


def b64decode_strict(text: str, what: str) -> bytes:
    try:
        raw = base64.b64decode(text.encode('ascii'), validate=True)
    except (binascii.Error, UnicodeEncodeError, AttributeError) as exc:
        raise MalformedKey(f"{what} is not valid base64") from exc
    # Unused trailing bits must be zero so each value has one spelling
    if base64.b64encode(raw).decode('ascii') != text:
        raise MalformedKey(f"{what} is not canonical base64")
    return raw


def sign(private_key: Ed25519PrivateKey, data: bytes) -> bytes:
    """Detached Ed25519 signature over data."""
    if not isinstance(private_key, Ed25519PrivateKey):
        raise MalformedKey(f"Expected an Ed25519 private key, got {type(private_key).__name__}")
    return private_key.sign(bytes(data))


def verify(public_key: Union[bytes, Ed25519PublicKey], data: bytes, signature: bytes) -> bool:
    """
    True iff signature is a valid signature of data under public_key.

    Raises:
        MalformedKey: public key material is invalid
    """
    key = load_public_key(public_key)
    try:
        key.verify(bytes(signature), bytes(data))
    except InvalidSignature:
        return False
    return True


@dataclass(frozen=True)
class KeyRecord:
    public_key: bytes
    owner_name: str = ''
    owner_email: str = ''
    algorithm: str = ALGORITHM

    def __post_init__(self):
        if self.algorithm != ALGORITHM:
            raise MalformedKey(f"Unsupported key algorithm {self.algorithm!r}")
        load_public_key(self.public_key)

    @property
    def key_id(self) -> str:
        return key_id_for(self.public_key)

    @property
    def public_key_b64(self) -> str:
        return base64.b64encode(self.public_key).decode('ascii')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'algorithm': self.algorithm,
            'email': self.owner_email,
            'name': self.owner_name,
            'public_key': self.public_key_b64,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'KeyRecord':
        if not isinstance(data, dict) or 'public_key' not in data:
            raise MalformedKey("Key record needs a public_key field")
        return cls(
            public_key=b64decode_strict(data['public_key'], 'public_key'),
            owner_name=str(data.get('name', '')),
            owner_email=str(data.get('email', '')),
            algorithm=data.get('algorithm', ALGORITHM),
        )

    def to_json(self) -> bytes:
        return canonical_json(self.to_dict()) + b'\n'

    @classmethod
    def load(cls, path: Path) -> 'KeyRecord':
        """
        Raises:
            StorageError: unreadable or malformed file (the message names it)
        """
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding='utf-8')))
        except (OSError, ValueError) as exc:
            raise StorageError(f"Cannot load key file {path}: {exc}", path=str(path)) from exc


def _write_private_key(path: Path, private_key: Ed25519PrivateKey) -> None:
    pem = private_key.private_bytes(
        encoding=serialization.Encoding.PEM,
        format=serialization.PrivateFormat.PKCS8,
        encryption_algorithm=serialization.NoEncryption(),
    )
    descriptor = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(descriptor, 'wb') as handle:
        handle.write(pem)
    os.chmod(path, 0o600)


def _load_private_key(path: Path) -> Ed25519PrivateKey:
    try:
        key = serialization.load_pem_private_key(path.read_bytes(), password=None)
    except (OSError, ValueError, TypeError) as exc:
        raise StorageError(f"Cannot load private key {path}: {exc}", path=str(path)) from exc
    if not isinstance(key, Ed25519PrivateKey):
        raise StorageError(f"{path} does not hold an Ed25519 private key", path=str(path))
    return key


def ensure_keypair(
    home_dir: Union[str, Path], owner: Optional[Tuple[str, str]] = None
) -> Tuple[KeyRecord, Ed25519PrivateKey]:
    """
    Load the signing identity under home_dir, creating it on first use.

    Args:
        home_dir: Identity directory (private_key.pem and public_key.json)
        owner: (name, email) for a new key; system defaults when omitted

    Returns:
        (public key record, private key)

    Raises:
        StorageError: existing files are unreadable, or the directory is not writable
    """
    home = Path(home_dir).expanduser()
    private_path = home / PRIVATE_KEY_FILE
    public_path = home / PUBLIC_KEY_FILE

    if private_path.exists():
        private_key = _load_private_key(private_path)
        public_bytes = raw_public_key(private_key)
        if public_path.exists():
            record = KeyRecord.load(public_path)
            if record.public_key != public_bytes:
                raise StorageError(
                    f"{public_path} does not match {private_path}", path=str(public_path)
                )
            return record, private_key
        name, email = owner or default_owner()
        record = KeyRecord(public_bytes, name, email)
    else:
        private_key = Ed25519PrivateKey.generate()
        name, email = owner or default_owner()
        record = KeyRecord(raw_public_key(private_key), name, email)
        try:
            home.mkdir(parents=True, exist_ok=True)
            _write_private_key(private_path, private_key)
        except OSError as exc:
            raise StorageError(
                f"Cannot write {private_path}: {exc}", path=str(private_path)
            ) from exc
        logger.info(f"Generated signing key {record.key_id} for {name} <{email}>")

    try:
        public_path.write_bytes(record.to_json())
    except OSError as exc:
        raise StorageError(f"Cannot write {public_path}: {exc}", path=str(public_path)) from exc
    return record, private_key
