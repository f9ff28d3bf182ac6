#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from .development import *

# GENERAL

SECRET_KEY = 'capsnet-test-key-*piusv42ywk&=dy$xc$qmk'

TEST_RUNNER = "django.test.runner.DiscoverRunner"

LOGGING["loggers"]["capsnet"]["level"] = "WARNING"

# Small defaults so command tests run in seconds
CAPSNET["DATA_DIR"] = str(ROOT_DIR / "test_data")
CAPSNET["WORKERS"] = 1
CAPSNET["TRAIN"]["BATCH_SIZE"] = 4
CAPSNET["TRAIN"]["EPOCHS"] = 1
CAPSNET["MULTIMNIST"]["PER_DIGIT"] = 2
CAPSNET["EVAL"]["ROUTING_DIAGNOSTIC_LIMIT"] = 20
