"""
Django settings for waveguide_sim project.

Generated by 'django-admin startproject' using Django 4.2.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('SECRET_KEY', 'django-insecure-waveguide-sim-local-only')

DEBUG = os.environ.get('DEBUG', 'True') == 'True'

ALLOWED_HOSTS = []


# Application definition
# Command-line only: no admin, sessions or templates are needed.

INSTALLED_APPS = [
    # Local apps
    'coupler',
]

# Results are written as flat CSV/JSON files; there is no database.
DATABASES = {}


# Simulation tunables
# Every value can be overridden from the environment or the .env file.

COUPLER = {
    # Relative width of the kappa == J band treated as the exceptional point
    'EP_TOLERANCE': float(os.environ.get('COUPLER_EP_TOLERANCE', '1e-12')),
    # Below this J/kappa the J -> 0 limit forms are used
    'J_LIMIT_THRESHOLD': float(os.environ.get('COUPLER_J_LIMIT_THRESHOLD', '1e-10')),
    'LEAK_THRESHOLD': float(os.environ.get('COUPLER_LEAK_THRESHOLD', '1e-6')),
    'MAX_FOCK_DIM': int(os.environ.get('COUPLER_MAX_FOCK_DIM', '4096')),
    'ORACLE_DT': float(os.environ.get('COUPLER_ORACLE_DT', '1e-3')),
    'MEANFIELD_STEP': float(os.environ.get('COUPLER_MEANFIELD_STEP', '1e-3')),
    'EB1_EPSREL': float(os.environ.get('COUPLER_EB1_EPSREL', '1e-8')),
    'EB1_PANEL_CAP': int(os.environ.get('COUPLER_EB1_PANEL_CAP', '200')),
    'D3_EPSILON': float(os.environ.get('COUPLER_D3_EPSILON', '1e-30')),
    'SWEEP_WORKERS': int(os.environ.get('COUPLER_SWEEP_WORKERS', '1')),
    'SWEEP_EP_MARGIN': float(os.environ.get('COUPLER_SWEEP_EP_MARGIN', '1e-3')),
    'PRESET_GRID': int(os.environ.get('COUPLER_PRESET_GRID', '200')),
    'OUTPUT_DIR': Path(os.environ.get('COUPLER_OUTPUT_DIR', BASE_DIR / 'output')),
}


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'coupler': {
            'handlers': ['console'],
            'level': os.environ.get('COUPLER_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
