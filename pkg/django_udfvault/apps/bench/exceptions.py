"""
Benchmark errors
"""
from apps.core.exceptions import UdfVaultError


class BenchError(UdfVaultError):
    pass


class InsufficientSpace(BenchError):
    """Scratch directory cannot hold the grids for a size."""


class BenchMismatch(BenchError):
    """A UDF read disagrees with the reference read of the same data."""
