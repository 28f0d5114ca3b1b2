"""
Manage the trust store.

    keys list
    keys import FILE [--profile NAME]
    keys move KEY_ID PROFILE
"""
from apps.trust.services.keys import KeyRecord
from apps.trust.services.store import UNTRUSTED

from ..base import UdfVaultCommand


class Command(UdfVaultCommand):
    help = 'List, import and move signer keys between trust profiles'

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)
        actions.add_parser('list', help='List known keys by profile')

        import_parser = actions.add_parser('import', help='Import a public key file')
        import_parser.add_argument('key_file', help='Key file (JSON with public_key, name, email)')
        import_parser.add_argument('--profile', default=UNTRUSTED)

        move_parser = actions.add_parser('move', help='Move a key to another profile')
        move_parser.add_argument('key_id')
        move_parser.add_argument('profile')

    def handle(self, *args, **options):
        store = self.trust_store
        action = options['action']
        if action == 'list':
            for entry in store.list_keys():
                record = entry.record
                self.stdout.write(
                    f"{entry.key_id}  {entry.profile:<12} "
                    f"{record.owner_name} <{record.owner_email}>"
                )
        elif action == 'import':
            record = KeyRecord.load(options['key_file'])
            store.import_key(record, options['profile'])
            self.stdout.write(f"Imported {record.key_id} into {options['profile']}")
        else:
            store.move_key(options['key_id'], options['profile'])
            self.stdout.write(f"Moved {options['key_id']} to {options['profile']}")
