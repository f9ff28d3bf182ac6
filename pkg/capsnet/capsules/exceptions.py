#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from capsnet.exceptions import CapsNetError, InvalidArgument


class CapsuleError(CapsNetError):
    """Base class of capsule-layer errors"""


class InvalidRoutingIterations(CapsuleError, InvalidArgument):
    """Raised when routing is asked to run fewer iterations than it needs"""

    def __init__(self, iterations, minimum=1):
        super().__init__(f"Routing needs at least {minimum} iteration(s), got {iterations}")
