"""
Container index: groups, dataset descriptors and attributes

The index is written as canonical JSON after the data region. Parsing and
re-serializing an index reproduces it byte for byte.
"""
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

from apps.core.serialization import canonical_json
from apps.filters.services.pipeline import UDF_ID, FilterSpec

from ..exceptions import CorruptContainer, InvalidPath, NotFound
from .dtypes import DType, element_count
from .layout import Layout

MAGIC = 'SDC1'
FORMAT_VERSION = 1
ROOT = '/'


def normalize_path(path: str) -> str:
    """
    Normalize an absolute container path ("/a/b/" -> "/a/b").

    Raises:
        InvalidPath: relative path, empty or dot components
    """
    if not isinstance(path, str) or not path.startswith('/'):
        raise InvalidPath(f"Container paths must be absolute, got {path!r}")
    if path == ROOT:
        return ROOT
    parts = path.rstrip('/').split('/')[1:]
    for part in parts:
        if part in ('', '.', '..'):
            raise InvalidPath(f"Path {path!r} has an empty or relative component")
    return '/' + '/'.join(parts)


def parent_path(path: str) -> str:
    head = path.rsplit('/', 1)[0]
    return head or ROOT


def basename(path: str) -> str:
    return path.rsplit('/', 1)[-1]


@dataclass(frozen=True)
class ChunkRecord:
    """Where one chunk lives: file offset, stored (filtered) and raw lengths."""

    offset: int
    stored_length: int
    raw_length: int

    def to_list(self) -> List[int]:
        return [self.offset, self.stored_length, self.raw_length]

    @classmethod
    def from_list(cls, value: Iterable[int]) -> 'ChunkRecord':
        offset, stored_length, raw_length = (int(v) for v in value)
        return cls(offset, stored_length, raw_length)


@dataclass
class DatasetMeta:
    path: str
    dtype: DType
    shape: Tuple[int, ...]
    layout: Layout = field(default_factory=Layout.contiguous)
    filters: Tuple[FilterSpec, ...] = field(default_factory=tuple)
    chunks: List[ChunkRecord] = field(default_factory=list)

    @property
    def element_count(self) -> int:
        return element_count(self.shape)

    @property
    def is_udf(self) -> bool:
        return any(spec.filter_id == UDF_ID for spec in self.filters)

    @property
    def stored_bytes(self) -> int:
        return sum(chunk.stored_length for chunk in self.chunks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'chunks': [chunk.to_list() for chunk in self.chunks],
            'dtype': self.dtype.to_dict(),
            'filters': [spec.to_list() for spec in self.filters],
            'layout': self.layout.to_dict(),
            'path': self.path,
            'shape': list(self.shape),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DatasetMeta':
        return cls(
            path=data['path'],
            dtype=DType.from_dict(data['dtype']),
            shape=tuple(int(extent) for extent in data['shape']),
            layout=Layout.from_dict(data['layout']),
            filters=tuple(FilterSpec.from_list(item) for item in data['filters']),
            chunks=[ChunkRecord.from_list(item) for item in data['chunks']],
        )


@dataclass
class ContainerIndex:
    groups: Set[str] = field(default_factory=lambda: {ROOT})
    datasets: List[DatasetMeta] = field(default_factory=list)
    attributes: Dict[Tuple[str, str], Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def dataset(self, path: str) -> DatasetMeta:
        found = self.find_dataset(path)
        if found is None:
            raise NotFound(f"No dataset at {path}", path=path)
        return found

    def find_dataset(self, path: str) -> Optional[DatasetMeta]:
        for meta in self.datasets:
            if meta.path == path:
                return meta
        return None

    def kind_of(self, path: str) -> Optional[str]:
        if path in self.groups:
            return 'group'
        if self.find_dataset(path) is not None:
            return 'dataset'
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'attributes': [
                {'key': key, 'path': path, 'value': value}
                for (path, key), value in sorted(self.attributes.items())
            ],
            'datasets': [meta.to_dict() for meta in self.datasets],
            'format_version': self.format_version,
            'groups': sorted(self.groups),
            'magic': MAGIC,
        }

    def serialize(self) -> bytes:
        return canonical_json(self.to_dict())

    @classmethod
    def parse(cls, raw: bytes) -> 'ContainerIndex':
        """
        Raises:
            CorruptContainer: not valid JSON, wrong magic or unreadable entries
        """
        try:
            data = json.loads(raw.decode('ascii'))
        except (UnicodeDecodeError, ValueError) as exc:
            raise CorruptContainer(f"Index is not valid JSON: {exc}") from exc
        if not isinstance(data, dict) or data.get('magic') != MAGIC:
            raise CorruptContainer("Index magic is missing or wrong")
        if data.get('format_version') != FORMAT_VERSION:
            raise CorruptContainer(
                f"Unsupported index format version {data.get('format_version')!r}"
            )
        try:
            return cls(
                groups=set(data['groups']) | {ROOT},
                datasets=[DatasetMeta.from_dict(item) for item in data['datasets']],
                attributes={
                    (item['path'], item['key']): item['value'] for item in data['attributes']
                },
                format_version=data['format_version'],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptContainer(f"Index entry is malformed: {exc}") from exc
