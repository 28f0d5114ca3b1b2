"""
Base class for udfvault commands

Adds --store (trust store root) and renders udfvault errors as
"<Code>: <message>" on stderr; main() turns them into exit code 2.
"""
import sys
from typing import Optional

from django.core.management.base import BaseCommand, CommandError

from apps.trust.services.store import TrustStore
from apps.udf.services.engine import UdfEngine


def parse_shape(text: str):
    """'1440x720' -> (1440, 720)."""
    try:
        shape = tuple(int(part) for part in text.lower().split('x'))
    except ValueError:
        raise CommandError(f"invalid shape {text!r}; use AxB[xC]") from None
    if not shape or any(extent < 1 for extent in shape):
        raise CommandError(f"invalid shape {text!r}; extents must be >= 1")
    return shape


class UdfVaultCommand(BaseCommand):
    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.add_argument(
            '--store',
            default=None,
            help='Trust store root (defaults to UDFVAULT_HOME)',
        )
        return parser

    def execute(self, *args, **options):
        self._store_root: Optional[str] = options.get('store')
        self._trust_store: Optional[TrustStore] = None
        return super().execute(*args, **options)

    @property
    def trust_store(self) -> TrustStore:
        if self._trust_store is None:
            self._trust_store = TrustStore(self._store_root)
        return self._trust_store

    def engine(self) -> UdfEngine:
        return UdfEngine(trust_store=self.trust_store)

    def write_bytes(self, data: bytes) -> None:
        stream = getattr(self.stdout, '_out', sys.stdout)
        stream = getattr(stream, 'buffer', stream)
        stream.write(data)
        stream.flush()
