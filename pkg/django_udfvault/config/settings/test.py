"""
Test settings
"""
import tempfile

from .base import *

DEBUG = False

# Tests override HOME per test through the settings fixture; this default keeps
# an accidental run away from the real ~/.udfvault.
UDFVAULT['HOME'] = tempfile.mkdtemp(prefix='udfvault-test-home-')
UDFVAULT['WALL_TIMEOUT'] = 5.0
UDFVAULT['BLOCK_SIZE'] = 4096
UDFVAULT['SANDBOX_ISOLATION'] = 'thread'
UDFVAULT['HOSTED_FUNCTIONS'] = [
    'apps.udf.services.hosted_demo.csv_project',
    'apps.udf.services.hosted_demo.fill_index',
]

LOGGING['loggers']['apps']['level'] = 'DEBUG'
