#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from pathlib import Path

from decouple import Csv, config

ROOT_DIR = Path(__file__).resolve(strict=True).parent.parent.parent

APPS_DIR = ROOT_DIR / "capsnet"

SECRET_KEY = config("DJANGO_SECRET_KEY", default="v0n3!capsnet-local-only-key-9w#k2m")

# Application definition

THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    'capsnet.autodiff',
    'capsnet.capsules',
    'capsnet.network',
    'capsnet.datasets',
    'capsnet.training',
    'capsnet.evaluation',
]

INSTALLED_APPS = THIRD_PARTY_APPS + LOCAL_APPS

# The engine keeps everything in files; there is no database.
DATABASES = {}

# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

# LOGGING
# https://docs.djangoproject.com/en/4.2/topics/logging/

LOG_LEVEL = config("CAPSNET_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "capsnet": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}

# CAPSNET
# Defaults of the engine; every value can be overridden from the environment.

CAPSNET = {
    "DATA_DIR": config("CAPSNET_DATA_DIR", default=str(ROOT_DIR / "data")),
    "WORKERS": config("CAPSNET_WORKERS", default=1, cast=int),
    "TRAIN": {
        "BATCH_SIZE": config("CAPSNET_BATCH_SIZE", default=128, cast=int),
        "LEARNING_RATE": config("CAPSNET_LEARNING_RATE", default=0.001, cast=float),
        "DECAY_RATE": config("CAPSNET_DECAY_RATE", default=0.96, cast=float),
        "DECAY_STEPS": config("CAPSNET_DECAY_STEPS", default=2000, cast=int),
        "EPOCHS": config("CAPSNET_EPOCHS", default=10, cast=int),
        "ROUTING_ITERATIONS": config("CAPSNET_ROUTING_ITERATIONS", default=3, cast=int),
        "RECONSTRUCTION_SCALE": config("CAPSNET_RECONSTRUCTION_SCALE", default=0.0005, cast=float),
        "SEED": config("CAPSNET_SEED", default=0, cast=int),
    },
    "AUGMENT": {
        "MAX_SHIFT": config("CAPSNET_MAX_SHIFT", default=2, cast=int),
    },
    "MULTIMNIST": {
        "PER_DIGIT": config("CAPSNET_MULTIMNIST_PER_DIGIT", default=10, cast=int),
        "DECAY_MULTIPLIER": config("CAPSNET_MULTIMNIST_DECAY_MULTIPLIER", default=10, cast=int),
    },
    "AFFINE": {
        "MAX_ROTATION": config("CAPSNET_AFFINE_MAX_ROTATION", default=20.0, cast=float),
        "SCALE_RANGE": config("CAPSNET_AFFINE_SCALE_RANGE", default="0.8,1.2", cast=Csv(float)),
        "MAX_SHEAR": config("CAPSNET_AFFINE_MAX_SHEAR", default=0.2, cast=float),
        "MAX_TRANSLATION": config("CAPSNET_AFFINE_MAX_TRANSLATION", default=6.0, cast=float),
        "MAX_ATTEMPTS": config("CAPSNET_AFFINE_MAX_ATTEMPTS", default=10, cast=int),
    },
    "EVAL": {
        "SEED": config("CAPSNET_EVAL_SEED", default=0, cast=int),
        "ROUTING_DIAGNOSTIC_LIMIT": config("CAPSNET_ROUTING_DIAGNOSTIC_LIMIT", default=1000, cast=int),
    },
}
