"""
Canonical JSON encoding

Container indexes and UDF headers are signed or compared byte-for-byte, so
every JSON document written by udfvault goes through canonical_json: sorted
keys, compact separators, ASCII only, no NaN/Infinity.
"""
import json
from typing import Any

import numpy as np


def _default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (bytes, bytearray)):
        return bytes(value).decode('utf-8')
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def canonical_json(value: Any) -> bytes:
    return json.dumps(
        value,
        sort_keys=True,
        separators=(',', ':'),
        ensure_ascii=True,
        allow_nan=False,
        default=_default,
    ).encode('ascii')
