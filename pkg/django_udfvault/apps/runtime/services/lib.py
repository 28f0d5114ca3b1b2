"""
Data-access API for executing UDFs

The module-level functions take an ExecutionEnv; UdfLib binds them to one
environment and is the `lib` object passed to hosted functions. Every call
checks the environment's cancel event first so a timed-out UDF stops at its
next library access.
"""
import logging
from typing import IO, Any, Dict, List, Optional

import numpy as np
import pandas as pd

from apps.container.services.dtypes import DType, DTypeKind

from ..exceptions import (
    CapabilityDenied,
    OutOfBounds,
    StringTooLong,
    Timeout,
    UdfPanic,
    VarStringWriteUnsupported,
)
from .compound import CompoundView, build_compound_view
from .environment import DatasetBuffer, ExecutionEnv

logger = logging.getLogger(__name__)


def get_data(env: ExecutionEnv, name: str) -> np.ndarray:
    """
    Flat buffer of a dataset: read-only for inputs, the writable output
    buffer for the output dataset.

    Raises:
        UnknownName
    """
    return env.resolve(name).data


def get_dims(env: ExecutionEnv, name: str) -> List[int]:
    return list(env.resolve(name).shape)


def get_type(env: ExecutionEnv, name: str) -> str:
    return env.resolve(name).dtype.name


def _string_target(buffer: DatasetBuffer, member: Optional[str]) -> DType:
    dtype = buffer.dtype
    if member is not None:
        if dtype.kind is not DTypeKind.COMPOUND:
            raise TypeError(f"{buffer.path} is not a compound dataset")
        dtype = dtype.member(member).dtype
    if not dtype.is_string:
        raise TypeError(f"{buffer.path} element is {dtype.name}, not a string")
    return dtype


def _check_index(buffer: DatasetBuffer, index: int) -> None:
    if not 0 <= index < buffer.element_count:
        raise OutOfBounds(
            f"index {index} outside {buffer.path} ({buffer.element_count} elements)",
            index=index,
        )


def string_get(env: ExecutionEnv, name: str, index: int, member: Optional[str] = None) -> str:
    """
    Text of one string element, fixed- or variable-length.

    Raises:
        UnknownName, OutOfBounds
    """
    buffer = env.resolve(name)
    dtype = _string_target(buffer, member)
    _check_index(buffer, index)
    value = buffer.data[index] if member is None else buffer.data[member][index]
    if dtype.kind is DTypeKind.VAR_STRING:
        return str(value)
    return bytes(value).rstrip(b'\0').decode('utf-8')


def string_set(
    env: ExecutionEnv, name: str, index: int, text: str, member: Optional[str] = None
) -> None:
    """
    Write one fixed-length string element of the output dataset.

    Raises:
        UnknownName, OutOfBounds, StringTooLong, VarStringWriteUnsupported,
        CapabilityDenied (target is an input)
    """
    buffer = env.resolve(name)
    if not env.is_output(buffer):
        raise CapabilityDenied(f"{buffer.path} is an input and cannot be written", path=buffer.path)
    dtype = _string_target(buffer, member)
    if dtype.kind is DTypeKind.VAR_STRING:
        raise VarStringWriteUnsupported(f"{buffer.path} holds variable-length strings")
    _check_index(buffer, index)
    encoded = text.encode('utf-8')
    if len(encoded) > dtype.length:
        raise StringTooLong(
            f"{len(encoded)} bytes do not fit fixed_string({dtype.length})",
            length=len(encoded),
            limit=dtype.length,
        )
    if member is None:
        buffer.data[index] = encoded
    else:
        buffer.data[member][index] = encoded


def open_resource(env: ExecutionEnv, path: str, mode: str = 'r', **kwargs: Any) -> IO:
    """
    Open a host file if the capability set allows it.

    Raises:
        CapabilityDenied: path (after resolving links) is outside the allowlist
    """
    writing = any(flag in mode for flag in 'wax+')
    allowed = env.capabilities.allows_write(path) if writing else env.capabilities.allows_read(path)
    if not allowed:
        access = 'write' if writing else 'read'
        logger.warning(f"Denied {access} access to {path} for {env.output.path}")
        raise CapabilityDenied(f"{access} access to {path} is not granted", path=path)
    return open(path, mode, **kwargs)


class UdfLib:
    """The `lib` object handed to hosted UDF functions."""

    def __init__(self, env: ExecutionEnv):
        self._env = env

    def _checkpoint(self) -> None:
        if self._env.cancel_event.is_set():
            raise Timeout("execution was cancelled")

    @property
    def options(self) -> Dict[str, Any]:
        return dict(self._env.options)

    @property
    def output_name(self) -> str:
        return self._env.output.alias

    def get_data(self, name: str) -> np.ndarray:
        self._checkpoint()
        return get_data(self._env, name)

    def get_dims(self, name: str) -> List[int]:
        self._checkpoint()
        return get_dims(self._env, name)

    def get_type(self, name: str) -> str:
        self._checkpoint()
        return get_type(self._env, name)

    def string(self, name: str, index: int, member: Optional[str] = None) -> str:
        self._checkpoint()
        return string_get(self._env, name, index, member)

    def set_string(self, name: str, index: int, text: str, member: Optional[str] = None) -> None:
        self._checkpoint()
        string_set(self._env, name, index, text, member)

    def compound_view(self, name: str) -> CompoundView:
        self._checkpoint()
        return build_compound_view(self._env.resolve(name).dtype)

    def open(self, path: str, mode: str = 'r', **kwargs: Any) -> IO:
        self._checkpoint()
        return open_resource(self._env, path, mode, **kwargs)

    def read_csv(self, path: str, **kwargs: Any) -> pd.DataFrame:
        """Parse a CSV file reached through the capability-checked open()."""
        with self.open(path, 'r', newline='') as handle:
            try:
                return pd.read_csv(handle, **kwargs)
            except (ValueError, pd.errors.ParserError) as exc:
                raise UdfPanic(f"cannot parse {path} as CSV: {exc}", path=path) from exc
