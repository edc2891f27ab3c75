"""
Django settings for the interdesign project.

The project hosts the interlacing-polynomial rounding library (``apps.design``)
and its run reports (``apps.reports``). There is no web front end; the
``interdesign`` management command is the only entry point.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Quick-start development settings - unsuitable for production
SECRET_KEY = os.environ.get("INTERDESIGN_SECRET_KEY", "interdesign-local-only")

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
]

# Local apps
INSTALLED_APPS += [
    "apps.design",
    "apps.reports",
]


# Database
# Run records are stored only when a command is invoked with --save.

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": os.environ.get("INTERDESIGN_DB", BASE_DIR / "interdesign.sqlite3"),
    }
}


# Internationalization

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True


# Default primary key field type

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Solver and rounding defaults, read through apps.design.conf
INTERDESIGN = {
    "TOL": 1e-6,
    "MAX_ITERS": 200_000,
    "ROOT_EPS": 1e-9,
    "REL_CUTOFF": 1e-10,
    "SINGULAR_CUTOFF": 1e-12,
    "MAX_LEAVES": 10**6,
    "WORKERS": int(os.environ.get("INTERDESIGN_WORKERS", "1")),
    "E_SOLVER": "sdp",
    "SCORE_TOL": 1e-6,
    "SCHEMA": 1,
}


# Logging
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        "apps": {
            "handlers": ["console"],
            "level": os.environ.get("INTERDESIGN_LOG_LEVEL", "WARNING"),
            "propagate": False,
        },
    },
}
