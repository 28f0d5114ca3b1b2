"""
udfvault command-line entry point

    udfvault attach FILE --backend NAME --source PATH --output DSPATH --dtype T
                    --shape AxB[xC] [--input alias=dspath]... [--embed-source]
    udfvault read FILE DSPATH [--format raw|csv]
    udfvault inspect FILE DSPATH
    udfvault keys {list,import,move} ...
    udfvault create-sample FILE --n N
    udfvault bench --out CSV [--max-n N]

Exit codes: 0 success, 1 usage error, 2 operational error.
"""
import logging
import os
import sys
from typing import List, Optional

DEFAULT_SETTINGS = 'config.settings.base'

COMMANDS = {
    'attach': 'attach',
    'read': 'read',
    'inspect': 'inspect',
    'keys': 'keys',
    'create-sample': 'create_sample',
    'bench': 'bench',
}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ERROR = 2

logger = logging.getLogger(__name__)


def usage() -> str:
    return 'usage: udfvault {' + ','.join(COMMANDS) + '} ...\n'


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', DEFAULT_SETTINGS)

    import django
    from django.core.management import load_command_class
    from django.core.management.base import CommandError

    django.setup()

    from apps.core.exceptions import UdfVaultError

    if not argv or argv[0] in ('-h', '--help'):
        stream = sys.stdout if argv else sys.stderr
        stream.write(usage())
        return EXIT_OK if argv else EXIT_USAGE

    name, rest = argv[0], argv[1:]
    if name not in COMMANDS:
        sys.stderr.write(f"udfvault: unknown command {name!r}\n{usage()}")
        return EXIT_USAGE

    command = load_command_class('apps.cli', COMMANDS[name])
    parser = command.create_parser('udfvault', name)
    try:
        options = vars(parser.parse_args(rest))
    except CommandError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_OK if not exc.code else EXIT_USAGE

    args = options.pop('args', ())
    try:
        command.execute(*args, **options)
    except CommandError as exc:
        sys.stderr.write(f"Error: {exc}\n")
        return EXIT_USAGE
    except UdfVaultError as exc:
        logger.debug(f"{name} failed", exc_info=True)
        sys.stderr.write(f"{exc.code}: {exc}\n")
        return EXIT_ERROR
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
