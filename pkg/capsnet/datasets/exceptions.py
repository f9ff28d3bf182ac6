#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from capsnet.exceptions import CapsNetError, InvalidArgument


class DatasetError(CapsNetError):
    """Base class of dataset reading and generation errors"""


class WrongMagic(DatasetError):
    """Raised when a file does not start with the magic number of the expected format"""

    def __init__(self, path, expected, actual):
        self.path = path
        self.expected = expected
        self.actual = actual
        super().__init__(f"{path}: wrong magic number, expected {expected!r}, got {actual!r}")


class UnsupportedVersion(DatasetError):
    """Raised when a MultiMNIST file has a version this reader does not know"""

    def __init__(self, path, version):
        super().__init__(f"{path}: unsupported format version {version}")


class TruncatedFile(DatasetError):
    """Raised when a file ends before the data its header announces"""

    def __init__(self, path, expected, actual):
        super().__init__(f"{path}: truncated, expected {expected} bytes, found {actual}")


class CountMismatch(DatasetError):
    """Raised when two counts that must agree (images and labels, header and payload) differ"""

    def __init__(self, what, expected, actual):
        super().__init__(f"{what}: expected {expected} items, got {actual}")


class InvalidLabel(DatasetError):
    """Raised when a label file holds a value outside 0..9"""

    def __init__(self, path, label):
        super().__init__(f"{path}: label {label} is not a digit")


class TooFewClasses(DatasetError):
    """Raised when overlapping digits are requested from a set with fewer than two classes"""

    def __init__(self, found):
        super().__init__(f"MultiMNIST needs at least two classes in the base set, found {found}")


class InvalidPerDigit(DatasetError, InvalidArgument):
    """Raised when fewer than one composite per base digit is requested"""

    def __init__(self, per_digit):
        super().__init__(f"MultiMNIST needs at least one composite per digit, got {per_digit}")


class AffineRejected(DatasetError):
    """Raised when no sampled affine transform keeps the digit on the canvas"""

    def __init__(self, attempts):
        super().__init__(f"No affine transform kept the digit on the canvas after {attempts} attempts")


class ProvenanceMismatch(DatasetError):
    """Raised when composites are read against a base split other than the one they were generated from"""

    def __init__(self, name, position, problem):
        super().__init__(f"{name}: composite {position} does not come from this base split, {problem}")
