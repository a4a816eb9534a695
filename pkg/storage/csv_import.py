"""
Ingest tensors supplied as coordinate CSV files.

Each line is ``i1,i2,i3,value`` with 1-based indices and no header.
"""

import numpy as np
import pandas as pd

from core.errors import TensorArgumentError
from core.tensors import ObservationMask, check_dims
from utils.logger import get_component_logger

logger = get_component_logger('storage', 'csv_import')


def _read_rows(path):
    try:
        return pd.read_csv(
            path, header=None, dtype=str, keep_default_na=False,
            skip_blank_lines=False, skipinitialspace=True
        )
    except pd.errors.EmptyDataError:
        raise TensorArgumentError(f"{path}: file is empty")
    except pd.errors.ParserError as e:
        raise TensorArgumentError(f"{path}: malformed CSV ({e})")


def import_csv(path, dims, mask_out=False):
    """
    Build a dense tensor from a coordinate CSV.

    Args:
        path: CSV file with rows ``i1,i2,i3,value``
        dims: Extents (I1, I2, I3)
        mask_out (bool): Allow missing cells and return their mask as well

    Returns:
        numpy.ndarray, or (numpy.ndarray, ObservationMask) with ``mask_out``;
        missing cells hold 0.

    Raises:
        TensorArgumentError: naming the 1-based line of a malformed row,
            an out-of-range index, a duplicate cell or a non-numeric value;
            also when cells are missing and ``mask_out`` is false
    """
    dims = check_dims(dims)
    rows = _read_rows(path)
    if rows.shape[1] != 4:
        raise TensorArgumentError(f"{path}: expected 4 columns i1,i2,i3,value, got {rows.shape[1]}")

    tensor = np.zeros(dims, order='F')
    seen = np.zeros(dims, dtype=bool)
    for line, (i1, i2, i3, raw) in enumerate(rows.itertuples(index=False, name=None), start=1):
        try:
            index = tuple(int(v) for v in (i1, i2, i3))
        except ValueError:
            raise TensorArgumentError(f"{path}, line {line}: indices must be integers, got {i1!r},{i2!r},{i3!r}")
        try:
            value = float(raw)
        except ValueError:
            raise TensorArgumentError(f"{path}, line {line}: non-numeric value {raw!r}")
        if not np.isfinite(value):
            raise TensorArgumentError(f"{path}, line {line}: non-finite value {raw!r}")
        if any(not 1 <= i <= d for i, d in zip(index, dims)):
            raise TensorArgumentError(f"{path}, line {line}: index {index} outside dims {dims}")
        cell = tuple(i - 1 for i in index)
        if seen[cell]:
            raise TensorArgumentError(f"{path}, line {line}: duplicate cell {index}")
        seen[cell] = True
        tensor[cell] = value

    missing = int(seen.size - seen.sum())
    logger.info(f"Imported {len(rows)} entries into a {dims} tensor from {path} ({missing} missing)")
    if mask_out:
        return tensor, ObservationMask.from_indicator(seen.astype(np.float64))
    if missing:
        raise TensorArgumentError(
            f"{path}: {missing} of {seen.size} cells unspecified; pass a mask output to import partial data"
        )
    return tensor
