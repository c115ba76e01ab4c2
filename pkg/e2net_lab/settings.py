from pathlib import Path
import os

from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('E2NET_SECRET_KEY', default='e2net-lab-local-only')
DEBUG = config('E2NET_DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'rest_framework',
    'continual',
]

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('E2NET_DB_PATH', default=str(BASE_DIR / 'db.sqlite3')),
        'OPTIONS': {
            'timeout': 20,
        }
    }
}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LOG_LEVEL = config('E2NET_LOG_LEVEL', default='INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
        'record': {
            'format': '{message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'simple'
        },
        'file': {
            'level': LOG_LEVEL,
            'class': 'logging.FileHandler',
            'filename': BASE_DIR / 'logs' / 'e2net.log',
            'formatter': 'verbose',
        },
        'metrics_file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': BASE_DIR / 'logs' / 'metrics.log',
            'formatter': 'record',
        },
    },
    'root': {
        'handlers': ['console'],
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'WARNING',
        },
        'continual': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'continual.metrics': {
            'handlers': ['metrics_file'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}

os.makedirs(BASE_DIR / 'logs', exist_ok=True)

E2NET_SETTINGS = {
    'OUTPUT_DIR': config('E2NET_OUTPUT_DIR', default=str(BASE_DIR / 'runs')),
    'WORKERS': config('E2NET_WORKERS', default=1, cast=int),
    'MONTE_CARLO_TRIALS': 200_000,
    'VERIFY_SEED': 2024,
    'JOINT_ACCURACY_FLOOR': config('E2NET_JOINT_ACCURACY_FLOOR', default=0.95, cast=float),
    'REPORT_FILE': 'report.csv',
    'EPOCHS_FILE': 'epochs.csv',
    'BOUNDARIES_FILE': 'boundaries.csv',
    'SCHEDULE_FILE': 'schedule.csv',
    'SUMMARY_FILE': 'summary.json',
    'RECENT_RUNS': 10,
}
