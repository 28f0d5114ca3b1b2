"""
Generate a sample container with Band4/Band5 grids.
"""
from django.core.management.base import CommandError

from apps.bench.services.bands import DEFAULT_SEED, gen_bands
from apps.bench.services.runner import NDVI_SOURCE
from apps.container.services.container import Container

from ..base import UdfVaultCommand


class Command(UdfVaultCommand):
    help = 'Create a container holding deterministic Band4 (red) and Band5 (NIR) grids'

    def add_arguments(self, parser):
        parser.add_argument('file', help='Container file to create (overwritten)')
        parser.add_argument('--n', type=int, default=None, help='Grid edge for square bands')
        parser.add_argument('--rows', type=int, default=None)
        parser.add_argument('--cols', type=int, default=None)
        parser.add_argument('--seed', type=int, default=DEFAULT_SEED)
        parser.add_argument(
            '--with-ndvi',
            action='store_true',
            help='Also attach an expr UDF /NDVI over the two bands',
        )

    def handle(self, *args, **options):
        n = options['n']
        rows = options['rows'] or n
        cols = options['cols'] or n
        if not rows or not cols or rows < 1 or cols < 1:
            raise CommandError('give --n, or both --rows and --cols, as positive integers')

        with Container.create(options['file']) as container:
            gen_bands(container, n, options['seed'], rows=rows, cols=cols)
            if options['with_ndvi']:
                record, signing_key = self.trust_store.identity()
                self.engine().attach(
                    container,
                    NDVI_SOURCE,
                    'expr',
                    '/NDVI',
                    'float32',
                    (rows, cols),
                    {'nir': '/Band5', 'red': '/Band4'},
                    signing_key,
                    owner=(record.owner_name, record.owner_email),
                )
        self.stdout.write(f"Wrote {rows}x{cols} bands to {options['file']}")
