#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

"""
MultiMNIST: pairs of different-class digits, each shifted by up to 4 pixels, overlaid on a 36x36 canvas.

On-disk format, little-endian:

    b"MMN1" | u32 version = 1 | u64 count | u8 height = 36 | u8 width = 36
    count records of  u8 label_a | u8 label_b | u32 idx_a | u32 idx_b | i8 dxa | i8 dya | i8 dxb | i8 dyb
                      | 1296 pixel bytes
"""

import logging
import struct
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import FrozenSet, NamedTuple, Tuple, Union

import numpy as np

from capsnet.datasets.augment import place
from capsnet.datasets.exceptions import (CountMismatch, InvalidPerDigit, ProvenanceMismatch, TooFewClasses,
                                         TruncatedFile, UnsupportedVersion, WrongMagic)
from capsnet.datasets.idx import ImageSet
from capsnet.utils.atomic_write.atomic_write import atomic_write

logger = logging.getLogger(__name__)

MAGIC = b"MMN1"
VERSION = 1
CANVAS = 36
MARGIN = 4
MAX_SHIFT = 4
DEFAULT_PER_DIGIT = 10
OVERLAP_SAMPLE = 10000

HEADER = struct.Struct("<4sIQBB")
RECORD_DTYPE = np.dtype([
    ("label_a", "u1"), ("label_b", "u1"),
    ("idx_a", "<u4"), ("idx_b", "<u4"),
    ("dxa", "i1"), ("dya", "i1"), ("dxb", "i1"), ("dyb", "i1"),
    ("pixels", "u1", (CANVAS, CANVAS)),
])

PathType = Union[str, PathLike]


class MultiExample(NamedTuple):
    pixels: np.ndarray
    labels: Tuple[int, int]
    indices: Tuple[int, int]
    shifts: Tuple[Tuple[int, int], Tuple[int, int]]

    @property
    def label_set(self) -> FrozenSet[int]:
        return frozenset(self.labels)


class MultiMnistSet(Sequence):
    """Composites stored as one structured array of records, in generation order"""

    def __init__(self, records: np.ndarray, name: str = "multimnist"):
        self.records = records
        self.name = name

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index) -> MultiExample:
        if isinstance(index, slice):
            raise TypeError("Use subset() to take part of a MultiMNIST set")
        record = self.records[index]
        return MultiExample(pixels=record["pixels"],
                            labels=(int(record["label_a"]), int(record["label_b"])),
                            indices=(int(record["idx_a"]), int(record["idx_b"])),
                            shifts=((int(record["dxa"]), int(record["dya"])),
                                    (int(record["dxb"]), int(record["dyb"]))))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiMnistSet):
            return NotImplemented
        return self.records.tobytes() == other.records.tobytes()

    def subset(self, count) -> "MultiMnistSet":
        if count is None or count >= len(self):
            return self
        return MultiMnistSet(self.records[:count], f"{self.name}[{count}]")

    def check_provenance(self, base: ImageSet) -> None:
        """
        Make sure both digits of every composite are where the composite says they are in `base`.

        :raises ProvenanceMismatch: An index past the end of `base`, or a label other than the base image's
        """
        for which in ("a", "b"):
            indices = self.records[f"idx_{which}"].astype(np.int64)
            beyond = np.flatnonzero(indices >= len(base))
            if beyond.size:
                position = int(beyond[0])
                raise ProvenanceMismatch(self.name, position,
                                         f"index {indices[position]} is past the {len(base)} base images")
        for which in ("a", "b"):
            indices = self.records[f"idx_{which}"].astype(np.int64)
            labels = self.records[f"label_{which}"]
            differs = np.flatnonzero(base.labels[indices] != labels)
            if differs.size:
                position = int(differs[0])
                raise ProvenanceMismatch(self.name, position,
                                         f"it says digit {labels[position]} but base image {indices[position]} is a "
                                         f"{base.labels[indices[position]]}")


def multimnist_size(base_count: int, per_digit: int) -> int:
    """Number of composites generated from `base_count` digits, `per_digit` composites each"""
    return base_count * per_digit


def _shifted(digit: np.ndarray, dx: int, dy: int) -> np.ndarray:
    return place(digit, CANVAS, MARGIN + dy, MARGIN + dx)


def source_digit(base: ImageSet, example: MultiExample, which: int) -> np.ndarray:
    """
    One of the two digits of a composite, shifted as in the composite.

    :param which: 0 for the first digit, 1 for the second
    :return:      36x36 uint8
    """
    dx, dy = example.shifts[which]
    return _shifted(base.images[example.indices[which]], dx, dy)


def compose(base: ImageSet, example: MultiExample) -> np.ndarray:
    """Recompute a composite from its provenance: the pixel-wise sum of both shifted digits, clipped at 255"""
    total = source_digit(base, example, 0).astype(np.uint16) + source_digit(base, example, 1)
    return np.minimum(total, 255).astype(np.uint8)


def _generate_for(base: ImageSet, partners, index: int, per_digit: int, seed: int, records: np.ndarray) -> None:
    rng = np.random.default_rng([seed, index])
    label = int(base.labels[index])
    candidates = partners[label]
    digit = base.images[index]
    for slot in range(index * per_digit, (index + 1) * per_digit):
        partner = int(candidates[rng.integers(len(candidates))])
        dxa, dya, dxb, dyb = (int(value) for value in rng.integers(-MAX_SHIFT, MAX_SHIFT + 1, size=4))
        record = records[slot]
        record["label_a"], record["label_b"] = label, base.labels[partner]
        record["idx_a"], record["idx_b"] = index, partner
        record["dxa"], record["dya"], record["dxb"], record["dyb"] = dxa, dya, dxb, dyb
        total = _shifted(digit, dxa, dya).astype(np.uint16) + _shifted(base.images[partner], dxb, dyb)
        record["pixels"] = np.minimum(total, 255)


def generate_multimnist(base: ImageSet, per_digit: int = DEFAULT_PER_DIGIT, seed: int = 0,
                        workers: int = 1) -> MultiMnistSet:
    """
    Overlay every digit of a split on `per_digit` partners of other classes from the same split.

    Composite `i * per_digit + k` is the k-th composite of base digit i.  Each base digit draws from its own stream
    seeded by (seed, i): a partner uniformly among all other-class digits, then four shifts uniform in -4..4.
    The result does not depend on the number of workers.

    :param base:      A 28x28 split
    :param per_digit: Composites per base digit, at least 1
    :param seed:      Generation seed
    :param workers:   Threads sharing the base digits
    :raises InvalidPerDigit: per_digit is below 1
    :raises TooFewClasses:   The split holds a single class
    """
    if per_digit < 1:
        raise InvalidPerDigit(per_digit)
    classes = base.classes
    if len(classes) < 2:
        raise TooFewClasses(len(classes))
    partners = {label: np.flatnonzero(base.labels != label) for label in classes}
    records = np.zeros(multimnist_size(len(base), per_digit), dtype=RECORD_DTYPE)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda index: _generate_for(base, partners, index, per_digit, seed, records),
                          range(len(base))))
    else:
        for index in range(len(base)):
            _generate_for(base, partners, index, per_digit, seed, records)

    generated = MultiMnistSet(records, f"{base.name}-multimnist")
    if len(generated):
        statistics = overlap_statistics(base, generated.subset(OVERLAP_SAMPLE))
        logger.info("Generated %d composites from %s: mean box overlap %.3f, mean IoU %.3f", len(generated),
                    base.name, statistics.box_overlap, statistics.intersection_over_union)
    return generated


def write_multimnist(examples: MultiMnistSet, path: PathType) -> None:
    """Write a set atomically; an empty set gives a valid file with count 0"""
    records = np.ascontiguousarray(examples.records, dtype=RECORD_DTYPE)
    with atomic_write(path) as stream:
        stream.write(HEADER.pack(MAGIC, VERSION, len(records), CANVAS, CANVAS))
        stream.write(records.tobytes())


def read_multimnist(path: PathType) -> MultiMnistSet:
    """
    Read a set written by `write_multimnist`.  Nothing is returned unless the whole file is consistent.

    :raises WrongMagic:         The file does not start with b"MMN1"
    :raises UnsupportedVersion: The version is not 1 or the canvas is not 36x36
    :raises TruncatedFile:      The file is shorter than its count announces
    :raises CountMismatch:      The file holds more records than its count announces
    """
    path = Path(path)
    content = path.read_bytes()
    if len(content) < HEADER.size:
        raise TruncatedFile(path, HEADER.size, len(content))
    magic, version, count, height, width = HEADER.unpack_from(content)
    if magic != MAGIC:
        raise WrongMagic(path, MAGIC, magic)
    if version != VERSION or (height, width) != (CANVAS, CANVAS):
        raise UnsupportedVersion(path, f"{version} ({height}x{width})")
    payload = len(content) - HEADER.size
    expected = count * RECORD_DTYPE.itemsize
    if payload < expected:
        raise TruncatedFile(path, HEADER.size + expected, len(content))
    if payload > expected:
        raise CountMismatch(str(path), count, payload / RECORD_DTYPE.itemsize)
    if count:
        records = np.frombuffer(content, dtype=RECORD_DTYPE, count=count, offset=HEADER.size).copy()
    else:
        records = np.zeros(0, dtype=RECORD_DTYPE)
    logger.info("Read %d composites from %s", count, path)
    return MultiMnistSet(records, path.stem)


@dataclass(frozen=True)
class OverlapStatistics:
    box_overlap: float
    intersection_over_union: float
    counted: int


def _box(image: np.ndarray):
    rows = np.flatnonzero(image.any(axis=1))
    columns = np.flatnonzero(image.any(axis=0))
    if not len(rows):
        return None
    return rows[0], rows[-1] + 1, columns[0], columns[-1] + 1


def overlap_statistics(base: ImageSet, examples: MultiMnistSet) -> OverlapStatistics:
    """
    How much the bounding boxes of the two digits overlap, averaged over the composites.

    `box_overlap` divides the intersection by the smaller box, `intersection_over_union` by the union.  Composites
    with a blank digit are left out.
    """
    overlaps, unions = [], []
    for example in examples:
        first, second = _box(source_digit(base, example, 0)), _box(source_digit(base, example, 1))
        if first is None or second is None:
            continue
        height = max(0, min(first[1], second[1]) - max(first[0], second[0]))
        width = max(0, min(first[3], second[3]) - max(first[2], second[2]))
        intersection = height * width
        areas = [(box[1] - box[0]) * (box[3] - box[2]) for box in (first, second)]
        overlaps.append(intersection / min(areas))
        unions.append(intersection / (sum(areas) - intersection))
    if not overlaps:
        return OverlapStatistics(0.0, 0.0, 0)
    return OverlapStatistics(float(np.mean(overlaps)), float(np.mean(unions)), len(overlaps))
