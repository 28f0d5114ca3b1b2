"""
Compound views

Compound members carry free-form names ("Temperature (F)") and sparse storage
offsets. A view gives each member a usable identifier and fills every gap in
the record with a synthetic `_padK` member so a UDF sees the exact storage
layout.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from apps.container.services.dtypes import DType, DTypeKind

from ..exceptions import InvalidMemberName, NameCollision

_NAME_TERMINATORS = '([{'


def sanitize_member_name(name: str) -> str:
    """
    Truncate at the first '(', '[' or '{', trim, lowercase, then map spaces
    and dashes to underscores.
    """
    cut = len(name)
    for terminator in _NAME_TERMINATORS:
        position = name.find(terminator)
        if position != -1:
            cut = min(cut, position)
    return name[:cut].strip().lower().replace(' ', '_').replace('-', '_')


@dataclass(frozen=True)
class ViewMember:
    view_name: str
    offset: int
    dtype: Optional[DType] = None
    raw_name: Optional[str] = None
    pad_length: int = 0

    @property
    def is_pad(self) -> bool:
        return self.dtype is None

    @property
    def size(self) -> int:
        return self.pad_length if self.is_pad else self.dtype.storage_size

    def to_dict(self) -> Dict[str, Any]:
        if self.is_pad:
            return {'length': self.pad_length, 'name': self.view_name, 'offset': self.offset}
        return {
            'dtype': self.dtype.name,
            'name': self.view_name,
            'offset': self.offset,
            'raw_name': self.raw_name,
        }


@dataclass(frozen=True)
class CompoundView:
    members: Tuple[ViewMember, ...]
    size: int

    @property
    def fields(self) -> List[ViewMember]:
        return [member for member in self.members if not member.is_pad]

    def raw_name(self, view_name: str) -> str:
        for member in self.fields:
            if member.view_name == view_name:
                return member.raw_name
        raise KeyError(view_name)

    def numpy_dtype(self) -> np.dtype:
        """Structured dtype over the same record bytes, named by view names."""
        return np.dtype({
            'names': [member.view_name for member in self.members],
            'formats': [
                f'V{member.pad_length}' if member.is_pad else member.dtype.numpy_dtype
                for member in self.members
            ],
            'offsets': [member.offset for member in self.members],
            'itemsize': self.size,
        })

    def to_dict(self) -> Dict[str, Any]:
        return {'members': [member.to_dict() for member in self.members], 'size': self.size}


def build_compound_view(dtype: DType) -> CompoundView:
    """
    Build the padded view of a compound type. Pads are numbered in member order.

    Raises:
        NameCollision: two members (or a member and a pad) share a view name
        InvalidMemberName: a member name sanitizes to nothing
    """
    if dtype.kind is not DTypeKind.COMPOUND:
        raise TypeError(f"{dtype.name} is not a compound type")

    members: List[ViewMember] = []
    taken: Dict[str, str] = {}
    position = 0
    pad_index = 0

    def add_pad(offset: int, length: int) -> None:
        nonlocal pad_index
        members.append(ViewMember(f'_pad{pad_index}', offset, pad_length=length))
        pad_index += 1

    for member in dtype.members:
        view_name = sanitize_member_name(member.raw_name)
        if not view_name:
            raise InvalidMemberName(
                f"member {member.raw_name!r} has no usable name", raw_name=member.raw_name
            )
        if view_name in taken:
            raise NameCollision(
                f"members {taken[view_name]!r} and {member.raw_name!r} both map to {view_name!r}",
                view_name=view_name,
            )
        taken[view_name] = member.raw_name

        if member.storage_offset > position:
            add_pad(position, member.storage_offset - position)
        members.append(ViewMember(view_name, member.storage_offset, member.dtype, member.raw_name))
        position = member.storage_offset + member.dtype.storage_size

    if dtype.size > position:
        add_pad(position, dtype.size - position)

    for member in members:
        if member.is_pad and member.view_name in taken:
            raise NameCollision(
                f"member {taken[member.view_name]!r} collides with padding {member.view_name!r}",
                view_name=member.view_name,
            )
    return CompoundView(tuple(members), dtype.size)
