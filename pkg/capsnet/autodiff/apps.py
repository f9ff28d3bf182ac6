#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from django.apps import AppConfig


class AutodiffConfig(AppConfig):
    name = 'capsnet.autodiff'
