"""
Element data types

A DType describes both the storage encoding of one element and the numpy
dtype used for in-memory buffers. All multi-byte values are little-endian.

Storage encodings:
- scalars: IEEE-754 / two's complement, little-endian
- FixedString(n): n bytes, NUL padded
- VarString: u32 heap offset per element; the chunk's heap follows the
  element stream as (u32 length, utf-8 bytes) records
- Compound: records of the declared storage size, members at their offsets
"""
import re
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import CorruptChunk, DTypeError, ShapeMismatch


class DTypeKind(Enum):
    INT8 = 'int8'
    INT16 = 'int16'
    INT32 = 'int32'
    INT64 = 'int64'
    UINT8 = 'uint8'
    UINT16 = 'uint16'
    UINT32 = 'uint32'
    UINT64 = 'uint64'
    FLOAT32 = 'float32'
    FLOAT64 = 'float64'
    FIXED_STRING = 'fixed_string'
    VAR_STRING = 'var_string'
    COMPOUND = 'compound'


SCALAR_NUMPY = {
    DTypeKind.INT8: '<i1',
    DTypeKind.INT16: '<i2',
    DTypeKind.INT32: '<i4',
    DTypeKind.INT64: '<i8',
    DTypeKind.UINT8: '<u1',
    DTypeKind.UINT16: '<u2',
    DTypeKind.UINT32: '<u4',
    DTypeKind.UINT64: '<u8',
    DTypeKind.FLOAT32: '<f4',
    DTypeKind.FLOAT64: '<f8',
}

# C-style spellings accepted when parsing type names (Listing-style headers use "float")
NAME_ALIASES = {
    'char': 'int8',
    'short': 'int16',
    'int': 'int32',
    'long': 'int64',
    'float': 'float32',
    'double': 'float64',
}

_FIXED_STRING_NAME = re.compile(r'^(?:fixed_)?string\((\d+)\)$')
_VAR_STRING_SIZE = 4


@dataclass(frozen=True)
class CompoundMember:
    """One named member of a compound record."""

    raw_name: str
    dtype: 'DType'
    storage_offset: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dtype': self.dtype.to_dict(),
            'name': self.raw_name,
            'offset': self.storage_offset,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CompoundMember':
        return cls(
            raw_name=data['name'],
            dtype=DType.from_dict(data['dtype']),
            storage_offset=int(data['offset']),
        )


@dataclass(frozen=True)
class DType:
    """Element type of a dataset."""

    kind: DTypeKind
    length: int = 0
    members: Tuple[CompoundMember, ...] = field(default_factory=tuple)
    size: int = 0

    def __post_init__(self):
        if self.kind is DTypeKind.FIXED_STRING and self.length < 1:
            raise DTypeError(f"FixedString length must be >= 1, got {self.length}")
        if self.kind is DTypeKind.COMPOUND:
            self._validate_compound()

    def _validate_compound(self):
        if not self.members:
            raise DTypeError("Compound type needs at least one member")
        names = set()
        previous_end = 0
        for index, member in enumerate(self.members):
            if member.raw_name in names:
                raise DTypeError(f"Duplicate compound member name {member.raw_name!r}")
            names.add(member.raw_name)
            if member.dtype.kind is DTypeKind.COMPOUND:
                raise DTypeError(f"Member {member.raw_name!r}: nested compounds are not supported")
            if member.dtype.kind is DTypeKind.VAR_STRING:
                raise DTypeError(
                    f"Member {member.raw_name!r}: variable-length strings cannot live in a record"
                )
            if member.storage_offset < 0:
                raise DTypeError(f"Member {member.raw_name!r} has a negative offset")
            if index > 0 and member.storage_offset < previous_end:
                raise DTypeError(
                    f"Member {member.raw_name!r} at offset {member.storage_offset} overlaps "
                    f"the previous member (ends at {previous_end})"
                )
            previous_end = member.storage_offset + member.dtype.storage_size
        if self.size < previous_end:
            raise DTypeError(
                f"Compound storage size {self.size} is smaller than the member extent "
                f"{previous_end}"
            )

    # Constructors

    @classmethod
    def scalar(cls, name: str) -> 'DType':
        kind = DTypeKind(NAME_ALIASES.get(name, name))
        if kind not in SCALAR_NUMPY:
            raise DTypeError(f"{name!r} is not a scalar type")
        return cls(kind)

    @classmethod
    def fixed_string(cls, length: int) -> 'DType':
        return cls(DTypeKind.FIXED_STRING, length=int(length))

    @classmethod
    def var_string(cls) -> 'DType':
        return cls(DTypeKind.VAR_STRING)

    @classmethod
    def compound(
        cls, members: Iterable[CompoundMember], size: Optional[int] = None
    ) -> 'DType':
        """
        Build a compound type.

        Args:
            members: Members in storage order
            size: Record storage size; defaults to the end of the last member
        """
        members = tuple(members)
        if size is None:
            size = max((m.storage_offset + m.dtype.storage_size for m in members), default=0)
        return cls(DTypeKind.COMPOUND, members=members, size=int(size))

    # Properties

    @property
    def is_scalar(self) -> bool:
        return self.kind in SCALAR_NUMPY

    @property
    def is_string(self) -> bool:
        return self.kind in (DTypeKind.FIXED_STRING, DTypeKind.VAR_STRING)

    @property
    def storage_size(self) -> int:
        """Bytes per element in the element stream."""
        if self.is_scalar:
            return np.dtype(SCALAR_NUMPY[self.kind]).itemsize
        if self.kind is DTypeKind.FIXED_STRING:
            return self.length
        if self.kind is DTypeKind.VAR_STRING:
            return _VAR_STRING_SIZE
        return self.size

    @property
    def name(self) -> str:
        """Textual name, as reported by lib.get_type and stored in UDF headers."""
        if self.kind is DTypeKind.FIXED_STRING:
            return f'fixed_string({self.length})'
        return self.kind.value

    @property
    def numpy_dtype(self) -> np.dtype:
        """In-memory numpy dtype (object for variable-length strings)."""
        if self.is_scalar:
            return np.dtype(SCALAR_NUMPY[self.kind])
        if self.kind is DTypeKind.FIXED_STRING:
            return np.dtype(f'S{self.length}')
        if self.kind is DTypeKind.VAR_STRING:
            return np.dtype(object)
        return np.dtype({
            'names': [m.raw_name for m in self.members],
            'formats': [m.dtype.numpy_dtype for m in self.members],
            'offsets': [m.storage_offset for m in self.members],
            'itemsize': self.size,
        })

    def member(self, raw_name: str) -> CompoundMember:
        for member in self.members:
            if member.raw_name == raw_name:
                return member
        raise DTypeError(f"Compound has no member {raw_name!r}")

    # Serialization

    def to_dict(self) -> Dict[str, Any]:
        if self.kind is DTypeKind.FIXED_STRING:
            return {'kind': self.kind.value, 'length': self.length}
        if self.kind is DTypeKind.COMPOUND:
            return {
                'kind': self.kind.value,
                'members': [m.to_dict() for m in self.members],
                'size': self.size,
            }
        return {'kind': self.kind.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DType':
        try:
            kind = DTypeKind(data['kind'])
        except (KeyError, ValueError) as exc:
            raise DTypeError(f"Unknown dtype descriptor {data!r}") from exc
        if kind is DTypeKind.FIXED_STRING:
            return cls.fixed_string(data['length'])
        if kind is DTypeKind.COMPOUND:
            return cls.compound(
                (CompoundMember.from_dict(m) for m in data['members']), size=data['size']
            )
        return cls(kind)


def parse_dtype_name(text: str) -> DType:
    """
    Parse a textual type name.

    Accepts the canonical names (int8 ... float64, fixed_string(N), var_string)
    and the C spellings in NAME_ALIASES.

    Raises:
        DTypeError: unknown name (compound types have no textual form)
    """
    name = text.strip().lower()
    match = _FIXED_STRING_NAME.match(name)
    if match:
        return DType.fixed_string(int(match.group(1)))
    if name in ('var_string', 'string'):
        return DType.var_string()
    name = NAME_ALIASES.get(name, name)
    try:
        kind = DTypeKind(name)
    except ValueError as exc:
        raise DTypeError(f"Unknown data type name {text!r}") from exc
    if kind not in SCALAR_NUMPY:
        raise DTypeError(f"Type {text!r} has no textual form; pass a descriptor")
    return DType(kind)


def supported_dtype_names() -> List[str]:
    return [kind.value for kind in SCALAR_NUMPY] + ['fixed_string(N)', 'var_string']


# Element buffers


def _to_fixed_bytes(values: np.ndarray, length: int) -> np.ndarray:
    if values.dtype.kind == 'S' and values.dtype.itemsize <= length:
        return values.astype(f'S{length}')
    encoded = []
    for item in values.ravel().tolist():
        raw = item.encode('utf-8') if isinstance(item, str) else bytes(item)
        if len(raw) > length:
            raise DTypeError(f"String of {len(raw)} bytes does not fit fixed_string({length})")
        encoded.append(raw)
    return np.array(encoded, dtype=f'S{length}')


def coerce_buffer(data: Any, dtype: DType, count: int) -> np.ndarray:
    """
    Turn caller-provided data into a flat in-memory buffer of `count` elements.

    Args:
        data: numpy array, sequence, or raw storage bytes (fixed-size dtypes only)
        dtype: Element type
        count: Expected element count

    Raises:
        ShapeMismatch: element count (or byte length) does not match
    """
    if isinstance(data, (bytes, bytearray, memoryview)):
        if dtype.kind is DTypeKind.VAR_STRING:
            raise ShapeMismatch("Variable-length strings cannot be passed as raw bytes")
        expected = count * dtype.storage_size
        if len(data) != expected:
            raise ShapeMismatch(
                f"Buffer holds {len(data)} bytes, expected {count} x {dtype.storage_size} = "
                f"{expected}",
                actual=len(data),
                expected=expected,
            )
        return np.frombuffer(bytes(data), dtype=dtype.numpy_dtype, count=count).copy()

    if dtype.kind is DTypeKind.VAR_STRING:
        values = np.empty(count, dtype=object)
        flat = list(np.asarray(data, dtype=object).ravel())
        if len(flat) != count:
            raise ShapeMismatch(f"Buffer holds {len(flat)} elements, expected {count}")
        values[:] = [v.decode('utf-8') if isinstance(v, bytes) else str(v) for v in flat]
        return values

    array = np.asarray(data)
    if array.size != count:
        raise ShapeMismatch(
            f"Buffer holds {array.size} elements, expected {count}",
            actual=int(array.size),
            expected=count,
        )
    if dtype.kind is DTypeKind.FIXED_STRING:
        return _to_fixed_bytes(array, dtype.length).ravel()
    if dtype.kind is DTypeKind.COMPOUND and array.dtype != dtype.numpy_dtype:
        converted = np.zeros(count, dtype=dtype.numpy_dtype)
        for member in dtype.members:
            converted[member.raw_name] = array.ravel()[member.raw_name]
        return converted
    return np.ascontiguousarray(array, dtype=dtype.numpy_dtype).ravel()


def encode_elements(values: np.ndarray, dtype: DType) -> bytes:
    """Storage bytes of a flat buffer (element stream, plus heap for var strings)."""
    if dtype.kind is not DTypeKind.VAR_STRING:
        return np.ascontiguousarray(values, dtype=dtype.numpy_dtype).tobytes()

    offsets = np.empty(len(values), dtype='<u4')
    heap = bytearray()
    for index, item in enumerate(values.tolist()):
        raw = item.encode('utf-8') if isinstance(item, str) else bytes(item)
        offsets[index] = len(heap)
        heap += struct.pack('<I', len(raw))
        heap += raw
    return offsets.tobytes() + bytes(heap)


def decode_elements(raw: bytes, dtype: DType, count: int) -> np.ndarray:
    """
    Flat in-memory buffer from storage bytes.

    Raises:
        CorruptChunk: byte length or heap references are inconsistent
    """
    if dtype.kind is not DTypeKind.VAR_STRING:
        expected = count * dtype.storage_size
        if len(raw) != expected:
            raise CorruptChunk(f"Element stream holds {len(raw)} bytes, expected {expected}")
        return np.frombuffer(raw, dtype=dtype.numpy_dtype, count=count).copy()

    stream_len = count * _VAR_STRING_SIZE
    if len(raw) < stream_len:
        raise CorruptChunk(f"String offset stream truncated ({len(raw)} < {stream_len} bytes)")
    offsets = np.frombuffer(raw, dtype='<u4', count=count)
    heap = memoryview(raw)[stream_len:]
    values = np.empty(count, dtype=object)
    for index, offset in enumerate(offsets.tolist()):
        if offset + 4 > len(heap):
            raise CorruptChunk(f"String {index} references heap offset {offset} beyond the heap")
        (length,) = struct.unpack_from('<I', heap, offset)
        start = offset + 4
        if start + length > len(heap):
            raise CorruptChunk(f"String {index} runs past the end of the heap")
        values[index] = bytes(heap[start:start + length]).decode('utf-8')
    return values


def element_count(shape: Sequence[int]) -> int:
    count = 1
    for extent in shape:
        count *= int(extent)
    return count
