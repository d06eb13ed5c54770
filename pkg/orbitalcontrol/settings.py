"""
Django settings for orbitalcontrol project.

For more information on this file, see
https://docs.djangoproject.com/en/5.1/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.1/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    "DJANGO_SECRET_KEY",
    "django-insecure-orbitais-7c1d0b2a9f4e8d6c5b3a1f0e9d8c7b6a5f4e3d2c1b0a",
)

DEBUG = os.environ.get("DJANGO_DEBUG", "0") == "1"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "orbitais",
]


# Database
# Nenhum model é persistido; o banco só existe para o test runner do Django.

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.1/topics/i18n/

LANGUAGE_CODE = "pt-br"

TIME_ZONE = "America/Sao_Paulo"

USE_I18N = True

USE_TZ = True


DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Logging
# https://docs.djangoproject.com/en/5.1/topics/logging/

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simples": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simples",
        },
    },
    "loggers": {
        "orbitais": {
            "handlers": ["console"],
            "level": os.environ.get("ORBITAIS_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}


# Padrões numéricos e de saída do app orbitais.
# Todas as energias em E_R, comprimentos em 1/k e tempos em hbar/E_R.

ORBITAIS = {
    "OUTPUT_DIR": os.environ.get("ORBITAIS_OUTPUT_DIR", str(BASE_DIR / "resultados")),
    "PLANE_WAVES": 33,
    "K_POINTS": 64,
    "POINTS_PER_SITE": 512,
    "WANNIER_SITES": 3,
    "TABLE_POINTS": 33,
    "RTOL": 1e-9,
    "ATOL": 1e-12,
    "SCAN_WINDOW_MS": 20.0,
    "SCAN_POINTS": 160,
    "SCAN_SAMPLES": 2001,
    "PEAK_THRESHOLD": 0.5,
    "PEAK_THRESHOLD_SPD": 0.2,
    "RAMP_DURATION_MS": 20.0,
    "KRYLOV_MAX_DIM": 30,
    "KRYLOV_TOL": 1e-10,
    "KRYLOV_STEPS_PER_PERIOD": 40,
    "ED_MAX_DIMENSION": 200_000,
    "ED_CHAIN_AXIS": "x",
}
