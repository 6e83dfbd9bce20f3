"""
Django settings for the spectral_lab project.

The project has no database models and no HTTP surface: Django provides the
settings layer, logging configuration, the cache framework and the
management-command front end for the numerical apps.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='spectral-lab-local-only-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # Third party apps
    'rest_framework',

    # Local apps
    'common',
    'equilibrium',
    'slcore',
    'modes_l0',
    'modes_fixedpoint',
    'dispersion',
    'wavefield',
    'runs',
]

# No persistence layer: results are CSV/JSON files written by the repositories.
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Django REST Framework Configuration (serializers, JSON parser and renderer only)
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
    'COERCE_DECIMAL_TO_STRING': False,
}

# Output locations
SPECTRA_OUTPUT_DIR = config('SPECTRA_OUTPUT_DIR', default=os.path.join(BASE_DIR, 'output'))
SPECTRA_LOG_FILE = config('SPECTRA_LOG_FILE', default=os.path.join(BASE_DIR, 'spectral_lab.log'))

# Numerical defaults shared by the apps
SPECTRAL_LAB = {
    # equilibrium
    'INVERSION_RTOL': config('SPECTRA_INVERSION_RTOL', default=1e-13, cast=float),
    'ENTROPY_VALIDATION_POINTS': 1024,
    'DERIVATIVE_STEP': 1e-6,
    'VACUUM_FIT_POINTS': 64,
    'PROFILE_EXPORT_POINTS': 401,
    'N2_FLOOR': 1e-12,
    'TABULATED_HYDROSTATIC_RTOL': 1e-4,
    # slcore
    'FD_CELLS': config('SPECTRA_FD_CELLS', default=400, cast=int),
    'FD_REFINEMENTS': 2,
    'FD_TOLERANCE': 1e-2,
    'SHOOTING_RTOL': config('SPECTRA_SHOOTING_RTOL', default=1e-10, cast=float),
    'SHOOTING_OFFSET': 1e-6,
    'LIOUVILLE_TABLE_POINTS': 1200,
    'LIOUVILLE_DERIVATIVE_STEP': 1e-2,
    'BRACKET_EXPANSIONS': 60,
    # modes_fixedpoint
    'FIXED_POINT_SCAN_POINTS': 64,
    'FIXED_POINT_XTOL': 1e-12,
    'LAMBDA0_FRACTION': 0.9,
    'FIXED_POINT_SCAN_FLOOR': 1e-4,
    'STABILITY_FLOOR': 1e-10,
    # dispersion
    'SERIES_ORDER': 8,
    'SERIES_OFFSET': 1e-6,
    'ODE_RTOL': 1e-10,
    'ODE_ATOL': 1e-13,
    'SCAN_POINTS': 64,
    'ROOT_RTOL': 1e-12,
    'SKIP_HALF_WIDTH': 1e-6,
    'OPERATOR_GRID_POINTS': 4001,
    'OPERATOR_SPLINE_DEGREE': 5,
    'GLUE_TOLERANCE': 1e-6,
    'NEAR_ROOT_RTOL': 1e-8,
    'NEAR_EIGENVALUE_TOLERANCE': 1e-10,
    'SIMPLICITY_FLOOR': 1e-8,
    'ROOT_SEPARATION': 1e-10,
    # wavefield
    'MAX_AMPLITUDE': 0.05,
    'DEFAULT_EPSILON': 1e-2,
    'SURFACE_TOLERANCE': 1e-12,
    # output
    'CSV_FLOAT_FORMAT': '%.17g',
}

# Logging Configuration
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
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': SPECTRA_LOG_FILE,
            'formatter': 'verbose',
            'delay': True,
        },
        'console': {
            'level': config('SPECTRA_CONSOLE_LOG_LEVEL', default='WARNING'),
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'INFO',
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
        **{
            app: {
                'handlers': ['console', 'file'],
                'level': 'DEBUG' if DEBUG else 'INFO',
                'propagate': False,
            }
            for app in (
                'common', 'equilibrium', 'slcore', 'modes_l0',
                'modes_fixedpoint', 'dispersion', 'wavefield', 'runs',
            )
        },
    },
}

# Cache Configuration (weighted spectra memoization)
CACHES = {
    'default': {
        'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
        'LOCATION': 'spectral-lab',
        'TIMEOUT': 3600,
        'OPTIONS': {
            'MAX_ENTRIES': 20000,
        }
    }
}

# Default cache timeout
DEFAULT_CACHE_TIMEOUT = 3600
