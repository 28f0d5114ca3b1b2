"""
Run the storage benchmark.
"""
from apps.bench.services.runner import DEFAULT_SIZES, run_bench

from ..base import UdfVaultCommand


class Command(UdfVaultCommand):
    help = 'Compare stored sizes and read times of reference grids and an NDVI UDF'

    def add_arguments(self, parser):
        parser.add_argument('--out', required=True, help='CSV report path')
        parser.add_argument('--max-n', type=int, default=None, help='Skip sizes above N')
        parser.add_argument('--sizes', type=int, nargs='+', default=list(DEFAULT_SIZES))
        parser.add_argument('--workdir', default=None, help='Scratch directory for containers')
        parser.add_argument('--seed', type=int, default=0)

    def handle(self, *args, **options):
        report = run_bench(
            options['out'],
            sizes=options['sizes'],
            max_n=options['max_n'],
            workdir=options['workdir'],
            seed=options['seed'],
            trust_store=self.trust_store,
        )
        for row in report.rows:
            self.stdout.write(
                f"{row.scenario:<18} N={row.N:<6} {row.layout:<10} "
                f"{row.stored_bytes:>12} B {row.wall_time_ns / 1e6:>10.1f} ms  {row.checksum}"
            )
        self.stdout.write(f"Report written to {options['out']}")
