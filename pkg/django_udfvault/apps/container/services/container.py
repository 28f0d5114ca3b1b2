"""
SDC1 container reader/writer

File layout:

    header   b"SDC1" + u16 format version
    data     chunk bytes, in write order
    index    canonical JSON (see index.py)
    footer   u64 index offset + b"SDC1"

Every mutating call writes its data at the end of the data region (over the
previous index), then rewrites index and footer and flushes. A container has
one writer; readers only see completed writes.
"""
import json
import logging
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from apps.core.exceptions import ShapeMismatch
from apps.core.serialization import canonical_json
from apps.filters.exceptions import FilterError, FilterFailure
from apps.filters.services.pipeline import (
    UDF_ID,
    FilterSpec,
    apply_read_chain,
    apply_write_chain,
    validate_chain,
)

from ..exceptions import (
    ContainerError,
    CorruptChunk,
    CorruptContainer,
    DuplicatePath,
    InvalidLayout,
    InvalidPath,
    NotFound,
)
from .dtypes import (
    DType,
    coerce_buffer,
    decode_elements,
    element_count,
    encode_elements,
    parse_dtype_name,
)
from .index import (
    FORMAT_VERSION,
    MAGIC,
    ROOT,
    ChunkRecord,
    ContainerIndex,
    DatasetMeta,
    normalize_path,
    parent_path,
)
from .layout import Layout, iter_chunk_slices, region_shape

logger = logging.getLogger(__name__)

_MAGIC_BYTES = MAGIC.encode('ascii')
_HEADER = struct.Struct('<4sH')
_FOOTER = struct.Struct('<Q4s')

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ListEntry:
    path: str
    kind: str
    meta: Optional[DatasetMeta] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'path': self.path, 'kind': self.kind}
        if self.meta is not None:
            data['meta'] = self.meta.to_dict()
        return data


def _as_dtype(dtype: Union[DType, str]) -> DType:
    return parse_dtype_name(dtype) if isinstance(dtype, str) else dtype


class Container:
    """
    Handle on one container file.

    Args:
        path: File path
        mode: 'r' read-only, 'a' read/append, 'w' create (truncates)
        udf_engine: Engine used to materialize UDF datasets; the default engine
            is used when omitted
    """

    MODES = ('r', 'a', 'w')

    def __init__(self, path: PathLike, mode: str = 'r', udf_engine: Any = None):
        if mode not in self.MODES:
            raise ValueError(f"Unknown container mode {mode!r}; use one of {self.MODES}")
        self.path = Path(path)
        self.mode = mode
        self._udf_engine = udf_engine
        self._lock = threading.Lock()

        if mode == 'w':
            self._file = open(self.path, 'w+b')
            self._file.write(_HEADER.pack(_MAGIC_BYTES, FORMAT_VERSION))
            self._data_end = _HEADER.size
            self._index = ContainerIndex()
            self._commit()
            logger.info(f"Created container {self.path}")
            return

        try:
            self._file = open(self.path, 'rb' if mode == 'r' else 'r+b')
        except FileNotFoundError as exc:
            raise NotFound(f"No container file at {self.path}", path=str(self.path)) from exc
        try:
            self._index, self._data_end = self._load()
        except Exception:
            self._file.close()
            raise

    @classmethod
    def create(cls, path: PathLike, udf_engine: Any = None) -> 'Container':
        return cls(path, 'w', udf_engine=udf_engine)

    @classmethod
    def open(cls, path: PathLike, mode: str = 'r', udf_engine: Any = None) -> 'Container':
        return cls(path, mode, udf_engine=udf_engine)

    def __enter__(self) -> 'Container':
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    @property
    def index(self) -> ContainerIndex:
        return self._index

    # Low-level I/O

    def _load(self):
        self._file.seek(0, 2)
        size = self._file.tell()
        if size < _HEADER.size + _FOOTER.size:
            raise CorruptContainer(f"{self.path} is too short to be a container ({size} bytes)")

        magic, version = _HEADER.unpack(self._read_at(0, _HEADER.size))
        if magic != _MAGIC_BYTES:
            raise CorruptContainer(f"{self.path} has bad header magic {magic!r}")
        if version != FORMAT_VERSION:
            raise CorruptContainer(f"{self.path} has unsupported format version {version}")

        index_offset, tail_magic = _FOOTER.unpack(self._read_at(size - _FOOTER.size, _FOOTER.size))
        if tail_magic != _MAGIC_BYTES:
            raise CorruptContainer(f"{self.path} has bad footer magic {tail_magic!r}")
        if not _HEADER.size <= index_offset <= size - _FOOTER.size:
            raise CorruptContainer(f"{self.path} footer points outside the file ({index_offset})")

        raw_index = self._read_at(index_offset, size - _FOOTER.size - index_offset)
        return ContainerIndex.parse(raw_index), index_offset

    def _read_at(self, offset: int, length: int) -> bytes:
        with self._lock:
            self._file.seek(offset)
            data = self._file.read(length)
        if len(data) != length:
            raise CorruptChunk(
                f"Short read at offset {offset}: wanted {length} bytes, got {len(data)}"
            )
        return data

    def _write_data(self, data: bytes) -> int:
        with self._lock:
            offset = self._data_end
            self._file.seek(offset)
            self._file.write(data)
            self._data_end = offset + len(data)
        return offset

    def _commit(self) -> None:
        raw_index = self._index.serialize()
        with self._lock:
            self._file.seek(self._data_end)
            self._file.write(raw_index)
            self._file.write(_FOOTER.pack(self._data_end, _MAGIC_BYTES))
            self._file.truncate()
            self._file.flush()

    def _require_writable(self) -> None:
        if self.mode == 'r':
            raise ContainerError(f"{self.path} is open read-only")

    # Groups and attributes

    def exists(self, path: str) -> bool:
        return self._index.kind_of(normalize_path(path)) is not None

    def create_group(self, path: str, parents: bool = True) -> None:
        """
        Raises:
            DuplicatePath: path already names a group or dataset
            NotFound: parent missing and parents=False
        """
        self._require_writable()
        path = normalize_path(path)
        if self._index.kind_of(path) is not None:
            raise DuplicatePath(f"{path} already exists", path=path)
        if parents:
            self._ensure_parents(path)
        elif parent_path(path) not in self._index.groups:
            raise NotFound(f"Parent group of {path} does not exist", path=path)
        self._index.groups.add(path)
        self._commit()
        logger.info(f"Created group {path} in {self.path.name}")

    def _ensure_parents(self, path: str) -> None:
        parent = parent_path(path)
        missing = []
        while parent != ROOT and parent not in self._index.groups:
            if self._index.find_dataset(parent) is not None:
                raise InvalidPath(f"Cannot nest {path} under dataset {parent}", path=path)
            missing.append(parent)
            parent = parent_path(parent)
        self._index.groups.update(missing)

    def set_attribute(self, path: str, key: str, value: Any) -> None:
        self._require_writable()
        path = normalize_path(path)
        if self._index.kind_of(path) is None:
            raise NotFound(f"No group or dataset at {path}", path=path)
        self._index.attributes[(path, str(key))] = json.loads(canonical_json(value))
        self._commit()

    def attributes(self, path: str) -> Dict[str, Any]:
        path = normalize_path(path)
        if self._index.kind_of(path) is None:
            raise NotFound(f"No group or dataset at {path}", path=path)
        return {
            key: value
            for (owner, key), value in sorted(self._index.attributes.items())
            if owner == path
        }

    # Datasets

    def meta(self, path: str) -> DatasetMeta:
        return self._index.dataset(normalize_path(path))

    def _claim_path(self, path: str) -> str:
        path = normalize_path(path)
        if path == ROOT or self._index.kind_of(path) is not None:
            raise DuplicatePath(f"{path} already exists", path=path)
        return path

    def create_dataset(
        self,
        path: str,
        dtype: Union[DType, str],
        shape: Sequence[int],
        data: Any,
        chunk_shape: Optional[Sequence[int]] = None,
        filters: Sequence[FilterSpec] = (),
    ) -> DatasetMeta:
        """
        Write a regular dataset.

        Args:
            path: Absolute dataset path; missing parent groups are created
            dtype: Element type (or its textual name)
            shape: Extents, each >= 1
            data: numpy array, sequence or raw storage bytes
            chunk_shape: Chunk extents; contiguous layout when omitted
            filters: Filter chain in write order (requires a chunked layout)

        Returns:
            The stored DatasetMeta

        Raises:
            DuplicatePath, ShapeMismatch, UnknownFilter, InvalidFilterParams, InvalidLayout
        """
        self._require_writable()
        path = self._claim_path(path)
        dtype = _as_dtype(dtype)
        shape = tuple(int(extent) for extent in shape)
        if not shape or any(extent < 1 for extent in shape):
            raise ShapeMismatch(f"Shape {list(shape)} must have extents >= 1", path=path)

        chain = tuple(validate_chain(filters))
        if any(spec.filter_id == UDF_ID for spec in chain):
            raise FilterFailure(f"{path}: the udf filter is only written by the udf engine")
        layout = Layout.chunked(chunk_shape) if chunk_shape else Layout.contiguous()
        layout.validate(shape)
        if chain and not layout.is_chunked:
            raise InvalidLayout(f"{path}: filtered datasets must be chunked", path=path)

        values = coerce_buffer(data, dtype, element_count(shape)).reshape(shape)

        encoded = []
        for region in iter_chunk_slices(shape, layout.chunk_shape):
            raw = encode_elements(values[region].ravel(), dtype)
            encoded.append((apply_write_chain(chain, raw), len(raw)))

        self._ensure_parents(path)
        chunks = []
        for stored, raw_length in encoded:
            offset = self._write_data(stored)
            chunks.append(ChunkRecord(offset, len(stored), raw_length))
            logger.debug(f"{path}: chunk @{offset} stored={len(stored)} raw={raw_length}")

        meta = DatasetMeta(path, dtype, shape, layout, chain, chunks)
        self._index.datasets.append(meta)
        self._commit()
        logger.info(
            f"Created dataset {path} {dtype.name}{list(shape)} "
            f"({len(chunks)} chunk(s), {meta.stored_bytes} bytes stored)"
        )
        return meta

    def write_payload(
        self, path: str, dtype: Union[DType, str], shape: Sequence[int], payload: bytes
    ) -> DatasetMeta:
        """
        Store a UDF payload as a single-block dataset carrying the udf filter.

        The index records the declared output dtype and shape; the stored bytes
        are the payload itself.
        """
        self._require_writable()
        path = self._claim_path(path)
        dtype = _as_dtype(dtype)
        shape = tuple(int(extent) for extent in shape)
        if not shape or any(extent < 1 for extent in shape):
            raise ShapeMismatch(f"Shape {list(shape)} must have extents >= 1", path=path)

        self._ensure_parents(path)
        offset = self._write_data(bytes(payload))
        meta = DatasetMeta(
            path,
            dtype,
            shape,
            Layout.contiguous(),
            (FilterSpec.udf(),),
            [ChunkRecord(offset, len(payload), len(payload))],
        )
        self._index.datasets.append(meta)
        self._commit()
        logger.info(f"Stored UDF dataset {path} ({len(payload)} byte payload)")
        return meta

    def read_raw(self, path: str) -> bytes:
        """Stored bytes of a single-block dataset, without inverting filters."""
        meta = self.meta(path)
        if len(meta.chunks) != 1:
            raise ContainerError(f"{meta.path} has {len(meta.chunks)} chunks; read_raw needs one")
        record = meta.chunks[0]
        return self._read_at(record.offset, record.stored_length)

    def _read_chunk(self, meta: DatasetMeta, record: ChunkRecord) -> bytes:
        stored = self._read_at(record.offset, record.stored_length)
        try:
            return apply_read_chain(meta.filters, stored, record.raw_length)
        except FilterError as exc:
            raise CorruptChunk(
                f"{meta.path}: chunk at offset {record.offset} failed to decode: {exc}",
                path=meta.path,
                offset=record.offset,
            ) from exc

    def read_dataset(self, path: str) -> np.ndarray:
        """
        Read a dataset as a numpy array of its declared shape.

        UDF datasets are materialized by the udf engine.

        Raises:
            NotFound, CorruptChunk, and any error raised by UDF execution
        """
        meta = self.meta(path)
        if meta.is_udf:
            return self._engine().decode_and_execute(self, meta.path)

        regions = list(iter_chunk_slices(meta.shape, meta.layout.chunk_shape))
        if len(regions) != len(meta.chunks):
            raise CorruptContainer(
                f"{meta.path} records {len(meta.chunks)} chunks, layout needs {len(regions)}"
            )
        values = np.empty(meta.shape, dtype=meta.dtype.numpy_dtype)
        for region, record in zip(regions, meta.chunks):
            extent = region_shape(region)
            raw = self._read_chunk(meta, record)
            values[region] = decode_elements(raw, meta.dtype, element_count(extent)).reshape(extent)
        return values

    def _engine(self):
        if self._udf_engine is None:
            from apps.udf.services.engine import get_default_engine

            self._udf_engine = get_default_engine()
        return self._udf_engine

    def list(self, prefix: str = ROOT) -> List[ListEntry]:
        """Groups and datasets under prefix (component-wise), sorted by path."""
        prefix = normalize_path(prefix)

        def matches(path: str) -> bool:
            return prefix == ROOT or path == prefix or path.startswith(prefix + '/')

        entries = [
            ListEntry(group, 'group') for group in self._index.groups
            if group != ROOT and matches(group)
        ]
        entries.extend(
            ListEntry(meta.path, 'dataset', meta)
            for meta in self._index.datasets
            if matches(meta.path)
        )
        return sorted(entries, key=lambda entry: entry.path)
