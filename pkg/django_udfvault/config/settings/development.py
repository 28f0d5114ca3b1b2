"""
Development settings
"""
from .base import *

DEBUG = True

# Verbose logging for local work
LOGGING['handlers']['console']['formatter'] = 'verbose'
LOGGING['loggers']['apps']['level'] = env('UDFVAULT_LOG_LEVEL', default='DEBUG')

# Keep the development trust store next to the project unless overridden
UDFVAULT['HOME'] = env('UDFVAULT_HOME', default=str(BASE_DIR / '.udfvault'))
