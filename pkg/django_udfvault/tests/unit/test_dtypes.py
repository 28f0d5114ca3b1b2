"""
Unit tests for element data types and element encoding
"""
import struct

import numpy as np
import pytest

from apps.container.exceptions import CorruptChunk, DTypeError, ShapeMismatch
from apps.container.services.dtypes import (
    CompoundMember,
    DType,
    DTypeKind,
    coerce_buffer,
    decode_elements,
    encode_elements,
    parse_dtype_name,
)


@pytest.mark.unit
class TestDTypeNames:
    """Parsing textual type names"""

    @pytest.mark.parametrize('name,kind', [
        ('int32', DTypeKind.INT32),
        ('float', DTypeKind.FLOAT32),
        ('double', DTypeKind.FLOAT64),
        ('UINT16', DTypeKind.UINT16),
        ('var_string', DTypeKind.VAR_STRING),
    ])
    def test_known_names(self, name, kind):
        """Canonical names and C spellings are accepted"""
        assert parse_dtype_name(name).kind is kind

    def test_fixed_string(self):
        """fixed_string(N) and string(N) both parse"""
        assert parse_dtype_name('fixed_string(8)') == DType.fixed_string(8)
        assert parse_dtype_name('string(3)').storage_size == 3

    @pytest.mark.parametrize('name', ['complex64', 'compound', ''])
    def test_unknown_names(self, name):
        """Unknown names and compound raise DTypeError"""
        with pytest.raises(DTypeError):
            parse_dtype_name(name)

    def test_storage_sizes(self):
        """Scalar sizes follow their bit width"""
        sizes = {name: parse_dtype_name(name).storage_size for name in ('int8', 'int64', 'float32')}
        assert sizes == {'int8': 1, 'int64': 8, 'float32': 4}


@pytest.mark.unit
class TestCompound:
    """Compound record types"""

    def _record(self):
        return DType.compound(
            [
                CompoundMember('Serial number', DType.scalar('int64'), 0),
                CompoundMember('Temperature (F)', DType.scalar('double'), 24),
                CompoundMember('Pressure (inHg)', DType.scalar('double'), 32),
            ],
            size=40,
        )

    def test_numpy_layout_matches_offsets(self):
        """The numpy dtype places members at their storage offsets"""
        numpy_dtype = self._record().numpy_dtype
        assert numpy_dtype.itemsize == 40
        assert numpy_dtype.fields['Temperature (F)'][1] == 24
        assert numpy_dtype.fields['Pressure (inHg)'][1] == 32

    def test_descriptor_round_trip(self):
        """to_dict/from_dict keeps members and size"""
        record = self._record()
        assert DType.from_dict(record.to_dict()) == record

    def test_overlapping_members_rejected(self):
        """Members may not overlap"""
        with pytest.raises(DTypeError):
            DType.compound([
                CompoundMember('a', DType.scalar('int64'), 0),
                CompoundMember('b', DType.scalar('int32'), 4),
            ])

    def test_duplicate_member_rejected(self):
        """Member names are unique"""
        with pytest.raises(DTypeError):
            DType.compound([
                CompoundMember('a', DType.scalar('int8'), 0),
                CompoundMember('a', DType.scalar('int8'), 1),
            ])

    def test_nested_compound_rejected(self):
        """Compound members cannot themselves be compounds"""
        inner = DType.compound([CompoundMember('x', DType.scalar('int8'), 0)])
        with pytest.raises(DTypeError):
            DType.compound([CompoundMember('inner', inner, 0)])


@pytest.mark.unit
class TestElementEncoding:
    """Element streams and the string heap"""

    def test_scalars_are_little_endian(self):
        """int32 values encode little-endian"""
        values = coerce_buffer([1, 256], DType.scalar('int32'), 2)
        assert encode_elements(values, DType.scalar('int32')) == b'\x01\0\0\0\0\x01\0\0'

    def test_fixed_strings_are_nul_padded(self):
        """Short strings are padded with NUL bytes"""
        dtype = DType.fixed_string(4)
        raw = encode_elements(coerce_buffer(['ab', 'wxyz'], dtype, 2), dtype)
        assert raw == b'ab\0\0wxyz'

    def test_fixed_string_too_long(self):
        """Strings longer than the fixed width are rejected"""
        with pytest.raises(DTypeError):
            coerce_buffer(['toolong'], DType.fixed_string(3), 1)

    def test_var_string_heap_layout(self):
        """Variable-length strings store offsets then (length, bytes) records"""
        dtype = DType.var_string()
        raw = encode_elements(coerce_buffer(['hi', 'ümlaut'], dtype, 2), dtype)
        second = 'ümlaut'.encode('utf-8')
        expected = (
            struct.pack('<II', 0, 6)
            + struct.pack('<I', 2) + b'hi'
            + struct.pack('<I', len(second)) + second
        )
        assert raw == expected
        assert decode_elements(raw, dtype, 2).tolist() == ['hi', 'ümlaut']

    def test_var_string_bad_heap_offset(self):
        """A heap offset beyond the heap is a corrupt chunk"""
        raw = struct.pack('<I', 100) + struct.pack('<I', 1) + b'x'
        with pytest.raises(CorruptChunk):
            decode_elements(raw, DType.var_string(), 1)

    def test_element_count_mismatch(self):
        """coerce_buffer checks the element count"""
        with pytest.raises(ShapeMismatch):
            coerce_buffer(np.arange(5), DType.scalar('int16'), 4)

    def test_raw_bytes_length_checked(self):
        """Raw byte input must hold exactly count elements"""
        with pytest.raises(ShapeMismatch):
            coerce_buffer(b'\0' * 7, DType.scalar('int32'), 2)
