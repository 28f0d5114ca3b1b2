"""
Attach a UDF dataset to a container.
"""
import sys
from pathlib import Path

from django.core.management.base import CommandError

from apps.container.services.container import Container
from apps.container.services.dtypes import supported_dtype_names

from ..base import UdfVaultCommand, parse_shape


def parse_input(text: str):
    alias, separator, path = text.partition('=')
    if not separator or not alias or not path:
        raise CommandError(f"invalid --input {text!r}; use alias=/dataset/path")
    return alias, path


class Command(UdfVaultCommand):
    help = 'Compile, sign and store a UDF dataset'

    def add_arguments(self, parser):
        parser.add_argument('file', help='Container file (must exist)')
        parser.add_argument('--backend', required=True, help='Backend name, e.g. expr or hosted')
        parser.add_argument('--source', required=True, help="UDF source file ('-' for stdin)")
        parser.add_argument('--output', required=True, help='Path of the new UDF dataset')
        parser.add_argument(
            '--dtype',
            required=True,
            help='Output element type: ' + ', '.join(supported_dtype_names()),
        )
        parser.add_argument('--shape', required=True, help='Output extents, AxB[xC]')
        parser.add_argument(
            '--input',
            action='append',
            default=[],
            dest='inputs',
            metavar='ALIAS=DSPATH',
            help='Input dataset and the name the UDF uses for it (repeatable)',
        )
        parser.add_argument(
            '--embed-source',
            action='store_true',
            help='Keep the source text in the payload header',
        )

    def read_source(self, location: str) -> str:
        if location == '-':
            return sys.stdin.read()
        try:
            return Path(location).read_text(encoding='utf-8')
        except OSError as exc:
            raise CommandError(f"cannot read source {location}: {exc}") from exc

    def handle(self, *args, **options):
        inputs = dict(parse_input(text) for text in options['inputs'])
        shape = parse_shape(options['shape'])
        source = self.read_source(options['source'])
        record, signing_key = self.trust_store.identity()

        with Container.open(options['file'], 'a') as container:
            meta = self.engine().attach(
                container,
                source,
                options['backend'],
                options['output'],
                options['dtype'],
                shape,
                inputs,
                signing_key,
                owner=(record.owner_name, record.owner_email),
                embed_source=options['embed_source'],
            )
        self.stdout.write(
            f"Attached {meta.path} ({meta.stored_bytes} byte payload, key {record.key_id})"
        )
