#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

"""
Reading and writing MNIST in the IDX format.

    images:  >i4 magic 0x00000803 | >i4 count | >i4 rows | >i4 columns | u1 pixels, row-major
    labels:  >i4 magic 0x00000801 | >i4 count | u1 labels
"""

import gzip
import logging
import struct
from collections.abc import Sequence
from os import PathLike
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from capsnet.datasets.exceptions import CountMismatch, InvalidLabel, TruncatedFile, WrongMagic
from capsnet.utils.atomic_write.atomic_write import atomic_write

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
NUM_CLASSES = 10

SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}

PathType = Union[str, PathLike]


class LabeledImage(NamedTuple):
    pixels: np.ndarray
    label: int

    def normalized(self) -> np.ndarray:
        """Pixels divided by 255, as float32"""
        return self.pixels.astype(np.float32) / 255


class ImageSet(Sequence):
    """
    Single-digit images backed by two arrays: uint8 pixels [N, H, W] and uint8 labels [N].

    Indexing returns a LabeledImage; `images` and `labels` give the arrays themselves.
    """

    def __init__(self, images: np.ndarray, labels: np.ndarray, name: str = ""):
        if len(images) != len(labels):
            raise CountMismatch(name or "image set", len(images), len(labels))
        self.images = images
        self.labels = labels
        self.name = name

    def __len__(self) -> int:
        return len(self.images)

    def __getitem__(self, index) -> LabeledImage:
        if isinstance(index, slice):
            raise TypeError("Use subset() to take part of an image set")
        return LabeledImage(self.images[index], int(self.labels[index]))

    @property
    def image_size(self):
        return self.images.shape[1:]

    @property
    def classes(self):
        return sorted(set(int(label) for label in np.unique(self.labels)))

    def subset(self, count: Optional[int], seed: Optional[int] = None) -> "ImageSet":
        """
        The first `count` images, or `count` images drawn without replacement when a seed is given.

        :param count: How many images to keep; everything when None or not smaller than the set
        :param seed:  Seed of the draw; keep the prefix when None
        """
        if count is None or count >= len(self):
            return self
        if seed is None:
            chosen = np.arange(count)
        else:
            chosen = np.sort(np.random.default_rng(seed).choice(len(self), size=count, replace=False))
        return ImageSet(self.images[chosen], self.labels[chosen], f"{self.name}[{count}]")


def _open(path: Path):
    if not path.exists() and path.with_name(path.name + ".gz").exists():
        path = path.with_name(path.name + ".gz")
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read(path: Path, magic: int, dimensions: int) -> np.ndarray:
    with _open(path) as stream:
        content = stream.read()
    header_size = 4 * (1 + dimensions)
    if len(content) < header_size:
        raise TruncatedFile(path, header_size, len(content))
    header = struct.unpack(f">{1 + dimensions}i", content[:header_size])
    if header[0] != magic:
        raise WrongMagic(path, hex(magic), hex(header[0]))
    shape = header[1:]
    expected = header_size + int(np.prod(shape))
    if len(content) < expected:
        raise TruncatedFile(path, expected, len(content))
    return np.frombuffer(content, dtype=np.uint8, count=expected - header_size, offset=header_size).reshape(shape)


def load_idx(images_path: PathType, labels_path: PathType, name: str = "") -> ImageSet:
    """
    Load an images file and its labels file.

    A `.gz` sibling is read when the plain file does not exist.

    :param images_path: IDX file with magic 0x803
    :param labels_path: IDX file with magic 0x801
    :param name:        Name of the set, used in reports
    :raises WrongMagic:     Either file has the wrong magic number
    :raises TruncatedFile:  Either file is shorter than its header announces
    :raises CountMismatch:  The files hold different numbers of items
    :raises InvalidLabel:   A label is not a digit
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    images = _read(images_path, IMAGES_MAGIC, 3)
    labels = _read(labels_path, LABELS_MAGIC, 1)
    if len(images) != len(labels):
        raise CountMismatch(f"{images_path} and {labels_path}", len(images), len(labels))
    if len(labels) and labels.max() >= NUM_CLASSES:
        raise InvalidLabel(labels_path, int(labels.max()))
    logger.info("Loaded %d images of %dx%d from %s", len(images), images.shape[1], images.shape[2], images_path)
    return ImageSet(images, labels, name or images_path.name)


def load_split(data_dir: PathType, split: str) -> ImageSet:
    """
    Load the standard MNIST training or test split from a directory.

    :param data_dir: Directory holding the four files as published, gzipped or not
    :param split:    "train" or "test"
    """
    if split not in SPLIT_FILES:
        raise ValueError(f"Unknown split '{split}', expected one of {sorted(SPLIT_FILES)}")
    images_name, labels_name = SPLIT_FILES[split]
    return load_idx(Path(data_dir) / images_name, Path(data_dir) / labels_name, name=split)


def write_idx(image_set: ImageSet, images_path: PathType, labels_path: PathType) -> None:
    """Write an image set as an uncompressed pair of IDX files"""
    images = np.ascontiguousarray(image_set.images, dtype=np.uint8)
    labels = np.ascontiguousarray(image_set.labels, dtype=np.uint8)
    with atomic_write(images_path) as stream:
        stream.write(struct.pack(">4i", IMAGES_MAGIC, *images.shape))
        stream.write(images.tobytes())
    with atomic_write(labels_path) as stream:
        stream.write(struct.pack(">2i", LABELS_MAGIC, len(labels)))
        stream.write(labels.tobytes())
