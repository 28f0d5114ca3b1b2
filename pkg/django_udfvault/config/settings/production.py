"""
Production settings
"""
from .base import *

DEBUG = False

# Hosted UDFs run in a forked child that can be terminated on timeout
UDFVAULT['SANDBOX_ISOLATION'] = env('UDFVAULT_SANDBOX_ISOLATION', default='process')

# File logging
LOG_DIR = Path(env('UDFVAULT_LOG_DIR', default=str(BASE_DIR / 'logs')))
LOG_DIR.mkdir(parents=True, exist_ok=True)

LOGGING['handlers']['file'] = {
    'class': 'logging.FileHandler',
    'filename': LOG_DIR / 'udfvault.log',
    'formatter': 'verbose',
}
LOGGING['loggers']['apps']['handlers'] = ['console', 'file']
LOGGING['loggers']['apps']['level'] = env('UDFVAULT_LOG_LEVEL', default='INFO')
