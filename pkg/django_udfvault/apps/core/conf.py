"""
Access to the UDFVAULT settings dict
"""
from typing import Any

from django.conf import settings

_DEFAULTS = {
    'HOME': '~/.udfvault',
    'OP_BUDGET': 10 ** 10,
    'MEMORY_CAP': 2 * 1024 ** 3,
    'WALL_TIMEOUT': 30.0,
    'WORKERS': 1,
    'BLOCK_SIZE': 262144,
    'SANDBOX_ISOLATION': 'thread',
    'DEFLATE_LEVEL': 6,
    'HOSTED_FUNCTIONS': [],
}


def udfvault_setting(name: str) -> Any:
    """
    Look up one UDFVAULT setting, falling back to the built-in default.

    Args:
        name: Key inside settings.UDFVAULT

    Returns:
        Configured value
    """
    configured = getattr(settings, 'UDFVAULT', {})
    if name in configured:
        return configured[name]
    return _DEFAULTS[name]
