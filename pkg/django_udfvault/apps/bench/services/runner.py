"""
Storage benchmark

For each grid edge N one container holds two generated bands plus four
scenarios over the same data:

    reference           int32, contiguous
    reference_chunked   int32, chunks [N, min(100, N)], shuffle(4) + deflate
    ndvi_precomputed    float64 NDVI, contiguous
    udf_ndvi            expr UDF computing the same NDVI at read time

Each dataset is read back through a freshly opened container and timed.
Sizes and value checksums are compared; timings are only reported.
"""
import hashlib
import logging
import shutil
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from apps.container.services.container import Container
from apps.filters.services.pipeline import FilterSpec
from apps.trust.services.store import TrustStore
from apps.udf.services.engine import UdfEngine

from ..exceptions import BenchMismatch, InsufficientSpace
from .bands import DEFAULT_SEED, gen_bands, ndvi

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (1000, 2000, 4000, 8000, 16000)
REPORT_COLUMNS = ['scenario', 'N', 'layout', 'stored_bytes', 'wall_time_ns', 'checksum']
NDVI_SOURCE = '(nir - red) / (nir + red)'

# band4 + band5 int16, two int32 grids, two float64 grids (one read back)
_BYTES_PER_ELEMENT = 2 + 2 + 4 + 4 + 8


def checksum(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values).tobytes()).hexdigest()[:16]


@dataclass
class BenchRow:
    scenario: str
    N: int
    layout: str
    stored_bytes: int
    wall_time_ns: int
    checksum: str

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class BenchReport:
    rows: List[BenchRow] = field(default_factory=list)

    def row(self, scenario: str, n: int) -> BenchRow:
        for row in self.rows:
            if row.scenario == scenario and row.N == n:
                return row
        raise KeyError((scenario, n))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.to_dict() for row in self.rows], columns=REPORT_COLUMNS)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator='\n')
        return path

    def storage_ratio(self, n: int) -> float:
        """Reference contiguous bytes over UDF payload bytes."""
        return self.row('reference', n).stored_bytes / self.row('udf_ndvi', n).stored_bytes


def required_bytes(n: int) -> int:
    return n * n * _BYTES_PER_ELEMENT


def check_space(workdir: Path, n: int) -> None:
    """
    Raises:
        InsufficientSpace
    """
    needed = required_bytes(n)
    free = shutil.disk_usage(workdir).free
    if free < needed:
        raise InsufficientSpace(
            f"N={n} needs about {needed} bytes in {workdir}, {free} are free",
            n=n,
            needed=needed,
            free=free,
        )


class BenchRunner:
    """
    Args:
        workdir: Scratch directory for containers (a temporary one when omitted)
        trust_store: Store whose identity signs the UDF; one under workdir when omitted
        seed: SplitMix64 seed for the bands
        keep_files: Leave the per-size containers in workdir
    """

    def __init__(
        self,
        workdir: Optional[Union[str, Path]] = None,
        trust_store: Optional[TrustStore] = None,
        seed: int = DEFAULT_SEED,
        keep_files: bool = False,
    ):
        if workdir is None:
            workdir = tempfile.mkdtemp(prefix='udfvault-bench-')
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.trust_store = trust_store or TrustStore(self.workdir / 'store')
        self.engine = UdfEngine(trust_store=self.trust_store)
        self.seed = seed
        self.keep_files = keep_files

    def _timed_read(self, path: Path, dataset: str):
        with Container.open(path, udf_engine=self.engine) as container:
            meta = container.meta(dataset)
            start = time.perf_counter_ns()
            values = container.read_dataset(dataset)
            elapsed = time.perf_counter_ns() - start
        return meta, values, elapsed

    def build(self, n: int) -> Path:
        """Write the bands and all scenario datasets for edge n."""
        path = self.workdir / f'bench-{n}.sdc'
        record, signing_key = self.trust_store.identity()
        with Container.create(path, udf_engine=self.engine) as container:
            band4, band5 = gen_bands(container, n, self.seed)
            reference = band4.astype(np.int32)
            container.create_dataset('/reference', 'int32', (n, n), reference)
            container.create_dataset(
                '/reference_chunked',
                'int32',
                (n, n),
                reference,
                chunk_shape=(n, min(100, n)),
                filters=(FilterSpec.shuffle(4), FilterSpec.deflate()),
            )
            container.create_dataset('/ndvi_precomputed', 'float64', (n, n), ndvi(band4, band5))
            self.engine.attach(
                container,
                NDVI_SOURCE,
                'expr',
                '/udf_ndvi',
                'float64',
                (n, n),
                {'nir': '/Band5', 'red': '/Band4'},
                signing_key,
                owner=(record.owner_name, record.owner_email),
            )
        return path

    def run_size(self, n: int) -> List[BenchRow]:
        """
        Raises:
            InsufficientSpace, BenchMismatch
        """
        check_space(self.workdir, n)
        path = self.build(n)
        rows = []
        checksums = {}
        try:
            for scenario in ('reference', 'reference_chunked', 'ndvi_precomputed', 'udf_ndvi'):
                meta, values, elapsed = self._timed_read(path, f'/{scenario}')
                layout = 'udf' if meta.is_udf else meta.layout.kind.value
                checksums[scenario] = checksum(values)
                rows.append(
                    BenchRow(scenario, n, layout, meta.stored_bytes, elapsed, checksums[scenario])
                )
                logger.info(
                    f"N={n} {scenario}: {meta.stored_bytes} bytes stored, read in {elapsed} ns"
                )
                del values
        finally:
            if not self.keep_files:
                path.unlink(missing_ok=True)

        for scenario, reference in (('reference_chunked', 'reference'),
                                    ('udf_ndvi', 'ndvi_precomputed')):
            if checksums[scenario] != checksums[reference]:
                raise BenchMismatch(
                    f"N={n}: {scenario} checksum {checksums[scenario]} "
                    f"!= {reference} {checksums[reference]}",
                    n=n,
                    scenario=scenario,
                )
        return rows

    def run(self, sizes: Sequence[int] = DEFAULT_SIZES, max_n: Optional[int] = None) -> BenchReport:
        report = BenchReport()
        for n in sorted(set(int(size) for size in sizes)):
            if max_n is not None and n > max_n:
                logger.info(f"Skipping N={n} (above --max-n {max_n})")
                continue
            report.rows.extend(self.run_size(n))
        return report


def run_bench(
    out_csv: Union[str, Path],
    sizes: Sequence[int] = DEFAULT_SIZES,
    max_n: Optional[int] = None,
    workdir: Optional[Union[str, Path]] = None,
    seed: int = DEFAULT_SEED,
    trust_store: Optional[TrustStore] = None,
) -> BenchReport:
    """Run every size up to max_n and write the CSV report to out_csv."""
    runner = BenchRunner(workdir, trust_store=trust_store, seed=seed)
    report = runner.run(sizes, max_n)
    report.write_csv(out_csv)
    logger.info(f"Wrote bench report with {len(report.rows)} rows to {out_csv}")
    return report
