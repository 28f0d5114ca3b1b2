"""
Base settings for udfvault
These settings are common to all environments
"""
from pathlib import Path
import environ

# Build paths
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Environment variables
env = environ.Env(
    DEBUG=(bool, False)
)

# Read .env file if it exists
env_file = BASE_DIR / '.env'
if env_file.exists():
    environ.Env.read_env(str(env_file))

# No web surface is served, but Django still expects a key to be configured.
SECRET_KEY = env('SECRET_KEY', default='udfvault-local-key-not-used-for-signing')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = []

# Application definition
LOCAL_APPS = [
    'apps.core',
    'apps.container',
    'apps.filters',
    'apps.exprlang',
    'apps.runtime',
    'apps.trust',
    'apps.udf',
    'apps.bench',
    'apps.cli',
]

INSTALLED_APPS = LOCAL_APPS

# Containers and trust stores live on the filesystem; no database is used.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# udfvault configuration defaults
UDFVAULT = {
    # Trust store root (profiles, imported keys, local signing identity)
    'HOME': env('UDFVAULT_HOME', default=str(Path.home() / '.udfvault')),

    # Sandbox limits applied when a trust profile does not override them
    'OP_BUDGET': env.int('UDFVAULT_OP_BUDGET', default=10 ** 10),
    'MEMORY_CAP': env.int('UDFVAULT_MEMORY_CAP', default=2 * 1024 ** 3),  # 2 GiB
    'WALL_TIMEOUT': env.float('UDFVAULT_WALL_TIMEOUT', default=30.0),  # seconds

    # Expression VM partitioning
    'WORKERS': env.int('UDFVAULT_WORKERS', default=1),
    'BLOCK_SIZE': env.int('UDFVAULT_BLOCK_SIZE', default=262144),

    # "thread" (cooperative cancellation) or "process" (fork + terminate)
    'SANDBOX_ISOLATION': env('UDFVAULT_SANDBOX_ISOLATION', default='thread'),

    'DEFLATE_LEVEL': env.int('UDFVAULT_DEFLATE_LEVEL', default=6),

    # Host functions exposed through the hosted backend
    'HOSTED_FUNCTIONS': env.list(
        'UDFVAULT_HOSTED_FUNCTIONS',
        default=['apps.udf.services.hosted_demo.csv_project'],
    ),
}

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        # StreamHandler writes to stderr; stdout is reserved for dataset values
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': env('DJANGO_LOG_LEVEL', default='WARNING'),
            'propagate': False,
        },
        'apps': {
            'handlers': ['console'],
            'level': env('UDFVAULT_LOG_LEVEL', default='WARNING'),
            'propagate': False,
        },
    },
}
