"""
Deterministic test bands

Band values come from a SplitMix64 stream: Band4 takes the first rows*cols
outputs, Band5 the next rows*cols. Each value is 1 + (output mod 10000), so
NDVI denominators are never zero.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from apps.container.services.container import Container

logger = logging.getLogger(__name__)

DEFAULT_SEED = 0
VALUE_RANGE = 10000

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int, skip: int = 0) -> np.ndarray:
    """Outputs skip+1 .. skip+count of the SplitMix64 generator seeded with seed."""
    steps = np.arange(skip + 1, skip + count + 1, dtype=np.uint64)
    with np.errstate(over='ignore'):
        z = np.uint64(seed % 2 ** 64) + steps * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def band_values(seed: int, shape: Tuple[int, int], band: int) -> np.ndarray:
    """Int16 grid for band 0 (Band4) or band 1 (Band5)."""
    count = shape[0] * shape[1]
    raw = splitmix64(seed, count, skip=band * count)
    return (raw % np.uint64(VALUE_RANGE) + np.uint64(1)).astype(np.int16).reshape(shape)


def gen_bands(
    container: Container,
    n: int,
    seed: int = DEFAULT_SEED,
    rows: Optional[int] = None,
    cols: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Write /Band4 (red) and /Band5 (near infrared) as int16 grids.

    Args:
        container: Container open for writing
        n: Grid edge when rows/cols are not given
        seed: SplitMix64 seed

    Returns:
        (band4, band5) values as written
    """
    shape = (int(rows or n), int(cols or n))
    if min(shape) < 1:
        raise ValueError(f"band shape {shape} must have extents >= 1")
    band4 = band_values(seed, shape, 0)
    band5 = band_values(seed, shape, 1)
    container.create_dataset('/Band4', 'int16', shape, band4)
    container.set_attribute('/Band4', 'long_name', 'Red')
    container.create_dataset('/Band5', 'int16', shape, band5)
    container.set_attribute('/Band5', 'long_name', 'Near-Infrared (NIR)')
    logger.info(f"Generated bands {shape[0]}x{shape[1]} with seed {seed}")
    return band4, band5


def ndvi(band4: np.ndarray, band5: np.ndarray) -> np.ndarray:
    """(nir - red) / (nir + red) in float64."""
    nir = band5.astype(np.float64)
    red = band4.astype(np.float64)
    with np.errstate(all='ignore'):
        return np.divide(np.subtract(nir, red), np.add(nir, red))
