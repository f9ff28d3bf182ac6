#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

"""
Example sources: what the trainer and the evaluator read.

A source turns a stored image into a network input in [0, 1] together with the classes present and the image each
present class should reconstruct.  Augmenting sources draw from the generator they are handed, so the caller owns
all randomness.
"""

from typing import NamedTuple, Optional, Tuple

import numpy as np

from capsnet.datasets.augment import DEFAULT_MAX_SHIFT, TRANSLATED_CANVAS, pad_translate_40, shift_augment
from capsnet.datasets.idx import ImageSet
from capsnet.datasets.multimnist import CANVAS, MultiMnistSet, source_digit


class TrainingExample(NamedTuple):
    image: np.ndarray
    targets: Tuple[int, ...]
    reconstruction_targets: Tuple[Tuple[int, np.ndarray], ...]


def normalize(pixels: np.ndarray) -> np.ndarray:
    return pixels.astype(np.float32) / 255


class ImageSource:
    """Single digits as stored, no augmentation"""
    mode = "single"

    def __init__(self, images: ImageSet):
        self.images = images

    @property
    def name(self) -> str:
        return self.images.name

    @property
    def input_size(self) -> int:
        return int(self.images.image_size[0])

    def __len__(self) -> int:
        return len(self.images)

    def pixels(self, index: int, rng: Optional[np.random.Generator]) -> np.ndarray:
        return self.images.images[index]

    def example(self, index: int, rng: Optional[np.random.Generator] = None) -> TrainingExample:
        image = normalize(self.pixels(index, rng))
        label = int(self.images.labels[index])
        return TrainingExample(image, (label,), ((label, image),))


class ShiftedMnist(ImageSource):
    """Digits shifted by up to `max_shift` pixels in each direction, a fresh shift on every draw"""

    def __init__(self, images: ImageSet, max_shift: int = DEFAULT_MAX_SHIFT):
        super().__init__(images)
        self.max_shift = max_shift

    def pixels(self, index, rng):
        if rng is None:
            return self.images.images[index]
        return shift_augment(self.images.images[index], self.max_shift, rng)


class TranslatedMnist(ImageSource):
    """28x28 digits at a random position of a 40x40 canvas, redrawn every time"""

    @property
    def input_size(self) -> int:
        return TRANSLATED_CANVAS

    def pixels(self, index, rng):
        return pad_translate_40(self.images.images[index], rng if rng is not None else np.random.default_rng(index))


class MultiMnistSource:
    """
    MultiMNIST composites.  Both digits are targets and each reconstructs its own shifted source digit, which is
    recovered from the composite's provenance.  `base` must be the split the composites were generated from.
    """
    mode = "multi"
    input_size = CANVAS

    def __init__(self, composites: MultiMnistSet, base: ImageSet):
        composites.check_provenance(base)
        self.composites = composites
        self.base = base

    @property
    def name(self) -> str:
        return self.composites.name

    def __len__(self) -> int:
        return len(self.composites)

    def example(self, index: int, rng: Optional[np.random.Generator] = None) -> TrainingExample:
        composite = self.composites[index]
        reconstruction_targets = tuple((label, normalize(source_digit(self.base, composite, which)))
                                       for which, label in enumerate(composite.labels))
        return TrainingExample(normalize(composite.pixels), tuple(composite.labels), reconstruction_targets)
