"""
Dataset storage layouts and the chunk grid
"""
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, Optional, Sequence, Tuple

from ..exceptions import InvalidLayout


class LayoutKind(Enum):
    CONTIGUOUS = 'contiguous'
    CHUNKED = 'chunked'


@dataclass(frozen=True)
class Layout:
    kind: LayoutKind = LayoutKind.CONTIGUOUS
    chunk_shape: Tuple[int, ...] = field(default_factory=tuple)

    @classmethod
    def contiguous(cls) -> 'Layout':
        return cls(LayoutKind.CONTIGUOUS)

    @classmethod
    def chunked(cls, chunk_shape: Sequence[int]) -> 'Layout':
        return cls(LayoutKind.CHUNKED, tuple(int(c) for c in chunk_shape))

    @property
    def is_chunked(self) -> bool:
        return self.kind is LayoutKind.CHUNKED

    def validate(self, shape: Sequence[int]) -> None:
        """
        Raises:
            InvalidLayout: chunk rank differs from the dataset rank, or an
                extent is outside 1..shape[d]
        """
        if not self.is_chunked:
            return
        if len(self.chunk_shape) != len(shape):
            raise InvalidLayout(
                f"Chunk shape {list(self.chunk_shape)} has rank {len(self.chunk_shape)}, "
                f"dataset has rank {len(shape)}"
            )
        for dim, (chunk, extent) in enumerate(zip(self.chunk_shape, shape)):
            if not 1 <= chunk <= extent:
                raise InvalidLayout(
                    f"Chunk extent {chunk} in dimension {dim} must be in 1..{extent}"
                )

    def to_dict(self) -> Dict[str, Any]:
        if self.is_chunked:
            return {'chunk_shape': list(self.chunk_shape), 'kind': self.kind.value}
        return {'kind': self.kind.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Layout':
        kind = LayoutKind(data['kind'])
        if kind is LayoutKind.CHUNKED:
            return cls.chunked(data['chunk_shape'])
        return cls.contiguous()


def iter_chunk_slices(
    shape: Sequence[int], chunk_shape: Optional[Sequence[int]] = None
) -> Iterator[Tuple[slice, ...]]:
    """
    Yield the region of every chunk, row-major over the chunk grid.

    Edge chunks are clipped to the dataset extent. Without a chunk shape the
    whole dataset is a single region.
    """
    if not chunk_shape:
        yield tuple(slice(0, int(extent)) for extent in shape)
        return
    ranges = [range(0, int(extent), int(chunk)) for extent, chunk in zip(shape, chunk_shape)]
    for origin in itertools.product(*ranges):
        yield tuple(
            slice(start, min(start + int(chunk), int(extent)))
            for start, chunk, extent in zip(origin, chunk_shape, shape)
        )


def region_shape(region: Tuple[slice, ...]) -> Tuple[int, ...]:
    return tuple(s.stop - s.start for s in region)
