"""
Text renderings of dataset values

CSV is row-major with one row per index of the leading dimension; compound
elements contribute one cell per member.
"""
import csv
import io
from typing import Any, List

import numpy as np


def format_scalar(value: Any) -> str:
    if isinstance(value, (bytes, np.bytes_)):
        return bytes(value).rstrip(b'\0').decode('utf-8', errors='replace')
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def format_element(value: Any) -> List[str]:
    if isinstance(value, np.void) and value.dtype.names:
        return [format_scalar(value[name]) for name in value.dtype.names]
    return [format_scalar(value)]


def to_csv(values: np.ndarray) -> str:
    values = np.asarray(values)
    rows = values.reshape(1) if values.ndim == 0 else values
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    for leading in range(rows.shape[0]):
        row: List[str] = []
        for element in np.asarray(rows[leading]).reshape(-1):
            row.extend(format_element(element))
        writer.writerow(row)
    return buffer.getvalue()


def to_raw(values: np.ndarray) -> bytes:
    """Element bytes in row-major order; variable-length strings as UTF-8 lines."""
    values = np.ascontiguousarray(values)
    if values.dtype == object:
        return ''.join(f'{text}\n' for text in values.reshape(-1)).encode('utf-8')
    return values.tobytes()
