"""
Print dataset values.
"""
from apps.container.services.container import Container

from ...formatting import to_csv, to_raw
from ..base import UdfVaultCommand


class Command(UdfVaultCommand):
    help = 'Read a dataset (UDF datasets are computed) and write its values to stdout'

    def add_arguments(self, parser):
        parser.add_argument('file', help='Container file')
        parser.add_argument('dataset', help='Dataset path')
        parser.add_argument('--format', choices=['raw', 'csv'], default='csv', dest='output_format')

    def handle(self, *args, **options):
        with Container.open(options['file'], udf_engine=self.engine()) as container:
            values = container.read_dataset(options['dataset'])
        if options['output_format'] == 'raw':
            self.write_bytes(to_raw(values))
        else:
            self.stdout.write(to_csv(values), ending='')
