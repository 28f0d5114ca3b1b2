"""
Execution environment handed to a UDF

An ExecutionEnv holds every input already materialized in memory, the output
buffer the UDF fills, the resource limits and the capability set granted by
the resolved trust profile.
"""
import logging
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from apps.container.services.dtypes import DType, DTypeKind, element_count
from apps.core.conf import udfvault_setting

from ..exceptions import UnknownName

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Limits:
    op_budget: int
    memory_cap: int
    wall_timeout: float

    @classmethod
    def defaults(cls) -> 'Limits':
        return cls(
            op_budget=int(udfvault_setting('OP_BUDGET')),
            memory_cap=int(udfvault_setting('MEMORY_CAP')),
            wall_timeout=float(udfvault_setting('WALL_TIMEOUT')),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'memory_cap': self.memory_cap,
            'op_budget': self.op_budget,
            'wall_timeout': self.wall_timeout,
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], base: Optional['Limits'] = None) -> 'Limits':
        """Limits from a (possibly partial) mapping; missing keys come from base or settings."""
        base = base or cls.defaults()
        data = data or {}
        return cls(
            op_budget=int(data.get('op_budget', base.op_budget)),
            memory_cap=int(data.get('memory_cap', base.memory_cap)),
            wall_timeout=float(data.get('wall_timeout', base.wall_timeout)),
        )


def _under(path: str, prefixes: Sequence[str]) -> bool:
    target = os.path.realpath(path)
    for prefix in prefixes:
        root = os.path.realpath(os.path.expanduser(prefix))
        if target == root or target.startswith(root.rstrip(os.sep) + os.sep):
            return True
    return False


@dataclass(frozen=True)
class Capabilities:
    """
    Resource grants. Filesystem grants are path-prefix allowlists; network
    access is never granted.
    """

    fs_read: Tuple[str, ...] = ()
    fs_write: Tuple[str, ...] = ()
    network: bool = False
    hosted_allowed: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'fs_read', tuple(self.fs_read))
        object.__setattr__(self, 'fs_write', tuple(self.fs_write))
        if self.network:
            logger.warning("Network capability requested; network access is always denied")
            object.__setattr__(self, 'network', False)

    @classmethod
    def deny_all(cls) -> 'Capabilities':
        return cls()

    def allows_read(self, path: str) -> bool:
        return _under(path, self.fs_read) or _under(path, self.fs_write)

    def allows_write(self, path: str) -> bool:
        return _under(path, self.fs_write)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'fs_read': list(self.fs_read),
            'fs_write': list(self.fs_write),
            'hosted_allowed': self.hosted_allowed,
            'network': self.network,
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'Capabilities':
        data = data or {}
        return cls(
            fs_read=tuple(data.get('fs_read', ())),
            fs_write=tuple(data.get('fs_write', ())),
            network=bool(data.get('network', False)),
            hosted_allowed=bool(data.get('hosted_allowed', False)),
        )


@dataclass
class DatasetBuffer:
    """One dataset in memory: flat buffer plus the metadata UDFs can query."""

    path: str
    alias: str
    data: np.ndarray
    dtype: DType
    shape: Tuple[int, ...]

    @property
    def element_count(self) -> int:
        return element_count(self.shape)

    @property
    def basename(self) -> str:
        return self.path.rsplit('/', 1)[-1]

    @property
    def nbytes(self) -> int:
        return int(self.data.nbytes)

    @classmethod
    def allocate(cls, path: str, alias: str, dtype: DType, shape: Sequence[int]) -> 'DatasetBuffer':
        shape = tuple(int(extent) for extent in shape)
        count = element_count(shape)
        if dtype.kind is DTypeKind.VAR_STRING:
            data = np.full(count, '', dtype=object)
        else:
            data = np.zeros(count, dtype=dtype.numpy_dtype)
        return cls(path, alias, data, dtype, shape)

    @classmethod
    def readonly(
        cls, path: str, alias: str, values: np.ndarray, dtype: DType, shape: Sequence[int]
    ) -> 'DatasetBuffer':
        data = np.ascontiguousarray(values).reshape(-1)
        data.flags.writeable = False
        return cls(path, alias, data, dtype, tuple(int(extent) for extent in shape))


@dataclass
class ExecutionEnv:
    inputs: List[DatasetBuffer]
    output: DatasetBuffer
    limits: Limits = field(default_factory=Limits.defaults)
    capabilities: Capabilities = field(default_factory=Capabilities.deny_all)
    options: Dict[str, Any] = field(default_factory=dict)
    cancel_event: threading.Event = field(default_factory=threading.Event)

    @classmethod
    def build(
        cls,
        inputs: Sequence[DatasetBuffer],
        output_path: str,
        output_dtype: DType,
        output_shape: Sequence[int],
        limits: Optional[Limits] = None,
        capabilities: Optional[Capabilities] = None,
        options: Optional[Dict[str, Any]] = None,
    ) -> 'ExecutionEnv':
        output_alias = output_path.rsplit('/', 1)[-1]
        return cls(
            inputs=list(inputs),
            output=DatasetBuffer.allocate(output_path, output_alias, output_dtype, output_shape),
            limits=limits or Limits.defaults(),
            capabilities=capabilities or Capabilities.deny_all(),
            options=dict(options or {}),
        )

    def private_copy(self) -> 'ExecutionEnv':
        """Same inputs and grants, a fresh output buffer and cancel event."""
        output = DatasetBuffer.allocate(
            self.output.path, self.output.alias, self.output.dtype, self.output.shape
        )
        return replace(self, output=output, cancel_event=threading.Event())

    def resolve(self, name: str) -> DatasetBuffer:
        """
        Find a buffer by alias, then full path, then basename.

        Raises:
            UnknownName: no match, or the basename is ambiguous
        """
        buffers = [*self.inputs, self.output]
        for buffer in buffers:
            if buffer.alias == name:
                return buffer
        for buffer in buffers:
            if buffer.path == name:
                return buffer
        matches = [buffer for buffer in buffers if buffer.basename == name]
        if len(matches) == 1:
            return matches[0]
        if matches:
            raise UnknownName(f"{name!r} matches several datasets; use the full path", name=name)
        raise UnknownName(f"{name!r} is not an input or the output dataset", name=name)

    def is_output(self, buffer: DatasetBuffer) -> bool:
        return buffer is self.output

    def input_map(self) -> 'OrderedDict[str, Tuple[np.ndarray, DType]]':
        """alias -> (buffer, dtype) in declaration order."""
        return OrderedDict((buffer.alias, (buffer.data, buffer.dtype)) for buffer in self.inputs)
