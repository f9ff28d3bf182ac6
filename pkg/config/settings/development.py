#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from .base import *

DEBUG = True

LOGGING["loggers"]["capsnet"]["level"] = config("CAPSNET_LOG_LEVEL", default="DEBUG")
