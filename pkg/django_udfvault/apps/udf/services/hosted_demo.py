"""
Hosted functions shipped with udfvault

csv_project reformats CSV rows into the output dataset. Options:

    path     CSV file; must be readable under the signer's profile
    column   source column for scalar and string outputs (first column by default)

Compound outputs take one column per member, matched by sanitized name
("Temperature (F)" reads column "temperature" or "Temperature (F)").
"""
import logging
from typing import List, Optional

import numpy as np
import pandas as pd

from apps.container.services.dtypes import DTypeKind
from apps.runtime.services.compound import sanitize_member_name
from apps.runtime.services.lib import UdfLib

logger = logging.getLogger(__name__)


def _column(frame: pd.DataFrame, name: str) -> pd.Series:
    by_sanitized = {sanitize_member_name(str(column)): column for column in frame.columns}
    if name in frame.columns:
        return frame[name]
    key = sanitize_member_name(name)
    if key in by_sanitized:
        return frame[by_sanitized[key]]
    raise KeyError(f"CSV has no column {name!r}; columns are {list(frame.columns)}")


def _texts(values: pd.Series) -> List[str]:
    return ['' if pd.isna(value) else str(value) for value in values.tolist()]


def _fill_strings(
    lib: UdfLib, output: str, values: pd.Series, member: Optional[str] = None
) -> None:
    for index, text in enumerate(_texts(values)):
        lib.set_string(output, index, text, member)


def csv_project(lib: UdfLib) -> None:
    options = lib.options
    if 'path' not in options:
        raise ValueError("csv_project needs a 'path' option")
    output = lib.output_name
    data = lib.get_data(output)
    count = data.shape[0]

    frame = lib.read_csv(options['path'])
    if len(frame) < count:
        raise ValueError(f"{options['path']} has {len(frame)} rows, output needs {count}")
    frame = frame.iloc[:count]

    type_name = lib.get_type(output)
    if type_name == DTypeKind.COMPOUND.value:
        view = lib.compound_view(output)
        for member in view.fields:
            values = _column(frame, member.raw_name)
            if member.dtype.is_string:
                _fill_strings(lib, output, values, member.raw_name)
            else:
                data[member.raw_name] = values.to_numpy().astype(member.dtype.numpy_dtype)
    else:
        values = _column(frame, options.get('column') or str(frame.columns[0]))
        if type_name == DTypeKind.VAR_STRING.value:
            # var_string outputs are object arrays written in place
            data[:] = _texts(values)
        elif type_name.startswith('fixed_string'):
            _fill_strings(lib, output, values)
        else:
            data[:] = values.to_numpy().astype(data.dtype)
    logger.debug(f"csv_project filled {count} rows of {output} from {options['path']}")


def fill_index(lib: UdfLib) -> None:
    """Write each element's flat index; needs no inputs or grants beyond hosted code."""
    data = lib.get_data(lib.output_name)
    data[:] = np.arange(data.shape[0]).astype(data.dtype)
