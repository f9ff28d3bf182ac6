#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

"""Small synthetic digit sets for tests"""

from pathlib import Path

import numpy as np

from capsnet.datasets.idx import SPLIT_FILES, ImageSet, write_idx


def digit_set(count: int, size: int = 28, classes: int = 4, seed: int = 0, name: str = "digits") -> ImageSet:
    """
    `count` images whose class decides where a bright bar sits, with some noise inside the bar.

    Labels cycle through 0..classes-1 so every class is present once count >= classes.
    """
    rng = np.random.default_rng(seed)
    images = np.zeros((count, size, size), dtype=np.uint8)
    labels = np.arange(count, dtype=np.uint8) % classes
    band = max(2, size // (2 * classes))
    for index, label in enumerate(labels):
        top = size // 4 + int(label) * band
        images[index, top:top + band, size // 4:3 * size // 4] = rng.integers(128, 256, size=(band, size // 2))
    return ImageSet(images, labels, name)


def write_mnist(directory, train: ImageSet, test: ImageSet) -> Path:
    """Write both splits under their published file names"""
    directory = Path(directory)
    for split, image_set in (("train", train), ("test", test)):
        images_name, labels_name = SPLIT_FILES[split]
        write_idx(image_set, directory / images_name, directory / labels_name)
    return directory
