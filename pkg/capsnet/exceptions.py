#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.


class CapsNetError(Exception):
    """Base class of every error raised by the capsnet apps"""


class InvalidArgument(CapsNetError, ValueError):
    """Raised when a caller passes a value an operation does not accept; commands report it as a usage error"""
