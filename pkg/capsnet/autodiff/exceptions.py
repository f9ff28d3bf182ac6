#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from capsnet.exceptions import CapsNetError


class AutodiffError(CapsNetError):
    """Base class of tensor and graph errors"""


class ShapeMismatch(AutodiffError):
    """Raised when an operation receives operands whose shapes do not conform"""

    def __init__(self, operation, axis, expected, actual):
        self.operation = operation
        self.axis = axis
        self.expected = expected
        self.actual = actual
        super().__init__(f"{operation}: axis '{axis}' expected {expected}, got {actual}")


class NonScalarLoss(AutodiffError):
    """Raised when backward() is asked to start from a tensor with more than one element"""

    def __init__(self, shape):
        super().__init__(f"backward() needs a scalar loss, got a tensor of shape {tuple(shape)}")


class GraphMismatch(AutodiffError):
    """Raised when tensors recorded on different graphs meet in one operation"""

    def __init__(self):
        super().__init__("Operands belong to different computation graphs")
