"""
Show a UDF dataset's header and signature status without running it.
"""
import json

from apps.container.services.container import Container

from ..base import UdfVaultCommand


class Command(UdfVaultCommand):
    help = 'Print the JSON header of a UDF dataset plus its verification status'

    def add_arguments(self, parser):
        parser.add_argument('file', help='Container file')
        parser.add_argument('dataset', help='UDF dataset path')

    def handle(self, *args, **options):
        engine = self.engine()
        with Container.open(options['file'], udf_engine=engine) as container:
            report = engine.inspect(container, options['dataset'])
        document = report.to_dict()
        document['dataset'] = options['dataset']
        self.stdout.write(json.dumps(document, indent=2, sort_keys=True))
