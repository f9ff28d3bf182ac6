#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from capsnet.exceptions import CapsNetError


class NetworkError(CapsNetError):
    """Base class of model errors"""


class ClassOutOfRange(NetworkError):
    """Raised when a class index does not name one of the digit capsules"""

    def __init__(self, value, num_classes):
        super().__init__(f"Class {value} is out of range, expected 0..{num_classes - 1}")


class EmptyTargetSet(NetworkError):
    """Raised when the margin loss is given no present class"""

    def __init__(self):
        super().__init__("The margin loss needs at least one present class")


class InputShapeError(NetworkError):
    """Raised when an image does not match the model's input size"""

    def __init__(self, expected, actual):
        super().__init__(f"The model expects {expected} images, got {tuple(actual)}")
