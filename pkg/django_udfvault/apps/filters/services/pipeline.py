"""
Per-chunk I/O filter pipeline

Filters are daisy-chained: the write path applies the chain left to right,
the read path applies the inverse of each filter right to left. Filter ids
are part of the container format and never change:

    1   shuffle  params [element_size]
    2   deflate  params [level 1-9]  (RFC 1951 raw deflate)
    500 udf      params []           (interpreted by the udf engine only)
"""
import logging
import zlib
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from apps.core.conf import udfvault_setting

from ..exceptions import (
    CorruptStream,
    FilterFailure,
    InvalidFilterParams,
    LengthMismatch,
    UnknownFilter,
)

logger = logging.getLogger(__name__)

SHUFFLE_ID = 1
DEFLATE_ID = 2
UDF_ID = 500

FILTER_NAMES = {
    SHUFFLE_ID: 'shuffle',
    DEFLATE_ID: 'deflate',
    UDF_ID: 'udf',
}

# Raw deflate: negative window bits suppress the zlib header and checksum
_RAW_WBITS = -15


@dataclass(frozen=True)
class FilterSpec:
    """One filter in a chain: its registry id and integer parameters."""

    filter_id: int
    params: Tuple[int, ...] = field(default_factory=tuple)

    @classmethod
    def shuffle(cls, element_size: int) -> 'FilterSpec':
        return cls(SHUFFLE_ID, (int(element_size),))

    @classmethod
    def deflate(cls, level: Optional[int] = None) -> 'FilterSpec':
        if level is None:
            level = udfvault_setting('DEFLATE_LEVEL')
        return cls(DEFLATE_ID, (int(level),))

    @classmethod
    def udf(cls) -> 'FilterSpec':
        return cls(UDF_ID, ())

    @property
    def name(self) -> str:
        return FILTER_NAMES.get(self.filter_id, f'filter{self.filter_id}')

    def to_list(self) -> List:
        return [self.filter_id, list(self.params)]

    @classmethod
    def from_list(cls, value: Sequence) -> 'FilterSpec':
        filter_id, params = value
        return cls(int(filter_id), tuple(int(p) for p in params))


def shuffle_bytes(data: bytes, element_size: int) -> bytes:
    """
    Byte-plane transpose: byte k of every element is grouped into plane k.

    Trailing bytes that do not fill a whole element are copied unchanged.
    """
    if element_size <= 1:
        return bytes(data)
    count = len(data) // element_size
    if count <= 1:
        return bytes(data)
    body = np.frombuffer(data, dtype=np.uint8, count=count * element_size)
    planes = body.reshape(count, element_size).T
    return planes.tobytes() + bytes(data[count * element_size:])


def unshuffle_bytes(data: bytes, element_size: int) -> bytes:
    """Inverse of shuffle_bytes."""
    if element_size <= 1:
        return bytes(data)
    count = len(data) // element_size
    if count <= 1:
        return bytes(data)
    body = np.frombuffer(data, dtype=np.uint8, count=count * element_size)
    elements = body.reshape(element_size, count).T
    return elements.tobytes() + bytes(data[count * element_size:])


def deflate_bytes(data: bytes, level: int) -> bytes:
    compressor = zlib.compressobj(level, zlib.DEFLATED, _RAW_WBITS)
    return compressor.compress(data) + compressor.flush()


def inflate_bytes(data: bytes) -> bytes:
    decompressor = zlib.decompressobj(_RAW_WBITS)
    try:
        output = decompressor.decompress(data) + decompressor.flush()
    except zlib.error as exc:
        raise CorruptStream(f"Deflate stream is corrupt: {exc}") from exc
    if not decompressor.eof:
        raise CorruptStream("Deflate stream is truncated")
    if decompressor.unused_data:
        raise CorruptStream(
            f"Deflate stream has {len(decompressor.unused_data)} trailing bytes"
        )
    return output


def validate_chain(chain: Iterable[FilterSpec]) -> List[FilterSpec]:
    """
    Check a chain for unknown ids, duplicates and parameter ranges.

    Args:
        chain: Filters in write order

    Returns:
        The chain as a list

    Raises:
        UnknownFilter: id not in the registry
        InvalidFilterParams: duplicate id, bad parameters, or UDF mixed with others
    """
    chain = list(chain)
    seen = set()
    for spec in chain:
        if spec.filter_id not in FILTER_NAMES:
            raise UnknownFilter(f"Unknown filter id {spec.filter_id}", filter_id=spec.filter_id)
        if spec.filter_id in seen:
            raise InvalidFilterParams(f"Filter {spec.name} appears twice in the chain")
        seen.add(spec.filter_id)

        if spec.filter_id == SHUFFLE_ID:
            if len(spec.params) != 1 or spec.params[0] < 1:
                raise InvalidFilterParams(
                    f"shuffle expects one positive element size, got {list(spec.params)}"
                )
        elif spec.filter_id == DEFLATE_ID:
            if len(spec.params) != 1 or not 1 <= spec.params[0] <= 9:
                raise InvalidFilterParams(
                    f"deflate expects one level in 1..9, got {list(spec.params)}"
                )
        elif spec.filter_id == UDF_ID:
            if spec.params:
                raise InvalidFilterParams("udf filter takes no parameters")

    if UDF_ID in seen and len(chain) > 1:
        raise InvalidFilterParams("udf filter must be the only filter in its chain")
    return chain


def apply_write_chain(chain: Sequence[FilterSpec], data: bytes) -> bytes:
    """
    Apply filters left to right.

    Raises:
        UnknownFilter: unregistered id
        FilterFailure: chain contains the UDF id
    """
    output = bytes(data)
    for spec in validate_chain(chain):
        if spec.filter_id == SHUFFLE_ID:
            output = shuffle_bytes(output, spec.params[0])
        elif spec.filter_id == DEFLATE_ID:
            output = deflate_bytes(output, spec.params[0])
        else:
            raise FilterFailure("udf filter payloads are stored by the udf engine")
    return output


def apply_read_chain(chain: Sequence[FilterSpec], data: bytes, expected_len: int) -> bytes:
    """
    Invert the chain right to left and check the restored length.

    Raises:
        CorruptStream: stored bytes cannot be inverted
        LengthMismatch: restored length differs from expected_len
    """
    output = bytes(data)
    for spec in reversed(validate_chain(chain)):
        if spec.filter_id == SHUFFLE_ID:
            output = unshuffle_bytes(output, spec.params[0])
        elif spec.filter_id == DEFLATE_ID:
            output = inflate_bytes(output)
        else:
            raise FilterFailure("udf filter payloads are decoded by the udf engine")

    if len(output) != expected_len:
        raise LengthMismatch(
            f"Filtered chunk restored to {len(output)} bytes, expected {expected_len}",
            actual=len(output),
            expected=expected_len,
        )
    return output
