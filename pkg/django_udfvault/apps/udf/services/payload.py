"""
UDF payload: canonical JSON header, one NUL byte, compiled object

The payload signature covers the canonical header without its
payload_signature field, a NUL byte, and the object bytes.
"""
import base64
import json
import logging
from dataclasses import dataclass
from typing import Tuple

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from apps.trust.exceptions import MalformedKey
from apps.trust.services import keys

from ..exceptions import MalformedHeader
from .metadata import UdfMetadata

logger = logging.getLogger(__name__)

SEPARATOR = b'\0'


def split_payload(data: bytes) -> Tuple[bytes, bytes]:
    """
    Split raw payload bytes at the first NUL.

    Raises:
        MalformedHeader: no separator
    """
    position = data.find(SEPARATOR)
    if position == -1:
        raise MalformedHeader("payload has no NUL separator after the header")
    return data[:position], data[position + 1:]


@dataclass(frozen=True)
class UdfPayload:
    metadata: UdfMetadata
    object_bytes: bytes
    raw_header: bytes = b''

    @property
    def header_bytes(self) -> bytes:
        return self.raw_header or self.metadata.header_bytes()

    @property
    def size(self) -> int:
        return len(self.header_bytes) + 1 + len(self.object_bytes)

    def to_bytes(self) -> bytes:
        return self.header_bytes + SEPARATOR + self.object_bytes

    def signed_bytes(self) -> bytes:
        return self.metadata.signed_header_bytes() + SEPARATOR + self.object_bytes

    @property
    def is_canonical(self) -> bool:
        """Stored header equals the canonical encoding of its parsed metadata."""
        return self.header_bytes == self.metadata.header_bytes()

    @property
    def public_key(self) -> bytes:
        """
        Raises:
            MalformedKey: the signature block holds no valid key
        """
        raw = keys.b64decode_strict(self.metadata.signature.public_key, 'public_key')
        keys.load_public_key(raw)
        return raw

    def verify(self) -> bool:
        """True iff payload_signature verifies under the embedded public key."""
        block = self.metadata.signature
        if not block.payload_signature:
            return False
        try:
            signature = keys.b64decode_strict(block.payload_signature, 'payload_signature')
            return keys.verify(self.public_key, self.signed_bytes(), signature)
        except MalformedKey as exc:
            logger.debug(f"Payload for {self.metadata.output_dataset} has a malformed key: {exc}")
            return False

    @classmethod
    def parse(cls, data: bytes) -> 'UdfPayload':
        """
        Raises:
            MalformedHeader: no separator, bad JSON, bad fields, or
                bytecode_size not matching the trailing length
        """
        header, object_bytes = split_payload(bytes(data))
        try:
            document = json.loads(header.decode('utf-8'))
        except (UnicodeDecodeError, ValueError) as exc:
            raise MalformedHeader(f"payload header is not JSON: {exc}") from exc
        metadata = UdfMetadata.from_dict(document)
        if metadata.bytecode_size != len(object_bytes):
            raise MalformedHeader(
                f"bytecode_size {metadata.bytecode_size} does not match "
                f"the {len(object_bytes)} bytes after the header",
                bytecode_size=metadata.bytecode_size,
                actual=len(object_bytes),
            )
        return cls(metadata, object_bytes, header)


def build_payload(
    metadata: UdfMetadata, object_bytes: bytes, signing_key: Ed25519PrivateKey
) -> UdfPayload:
    """Sign metadata plus object; bytecode_size must already match the object."""
    if metadata.bytecode_size != len(object_bytes):
        raise MalformedHeader(
            f"bytecode_size {metadata.bytecode_size} != object length {len(object_bytes)}"
        )
    unsigned = UdfPayload(metadata.with_signature(''), bytes(object_bytes))
    signature = keys.sign(signing_key, unsigned.signed_bytes())
    signed = metadata.with_signature(base64.b64encode(signature).decode('ascii'))
    return UdfPayload(signed, bytes(object_bytes))
