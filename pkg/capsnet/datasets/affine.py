#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

"""
Small random affine transforms of MNIST digits on a 40x40 canvas, the test set for affine robustness.

Coordinates are (row, column).  A transform maps a canvas point p to c + A (p - c) + t where c is the canvas
centre, so A turns the digit about the middle of the canvas and t moves it.  Resampling runs backwards: every
output pixel looks up its source position and interpolates bilinearly.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from django.conf import settings
from scipy import ndimage

from capsnet.datasets.augment import TRANSLATED_CANVAS, place
from capsnet.datasets.exceptions import AffineRejected
from capsnet.datasets.idx import ImageSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AffineBounds:
    max_rotation: float = 20.0
    scale_range: Tuple[float, float] = (0.8, 1.2)
    max_shear: float = 0.2
    max_translation: float = 6.0
    max_attempts: int = 10

    @classmethod
    def from_settings(cls) -> "AffineBounds":
        configured = settings.CAPSNET["AFFINE"]
        return cls(max_rotation=float(configured["MAX_ROTATION"]),
                   scale_range=tuple(float(value) for value in configured["SCALE_RANGE"]),
                   max_shear=float(configured["MAX_SHEAR"]),
                   max_translation=float(configured["MAX_TRANSLATION"]),
                   max_attempts=int(configured["MAX_ATTEMPTS"]))


@dataclass(frozen=True)
class AffineParams:
    matrix: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if np.linalg.det(self.matrix) <= 0:
            raise ValueError("Affine transforms must preserve orientation")

    @classmethod
    def identity(cls) -> "AffineParams":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def translation_by(cls, rows: float, columns: float) -> "AffineParams":
        return cls(np.eye(2), np.array([rows, columns], dtype=float))

    @classmethod
    def rotation(cls, degrees: float) -> "AffineParams":
        angle = math.radians(degrees)
        cos, sin = math.cos(angle), math.sin(angle)
        return cls(np.array([[cos, -sin], [sin, cos]]), np.zeros(2))

    @classmethod
    def sample(cls, rng: np.random.Generator, bounds: AffineBounds = AffineBounds()) -> "AffineParams":
        """Rotation, isotropic scale and horizontal shear, each uniform within the bounds, then a translation"""
        rotation = cls.rotation(rng.uniform(-bounds.max_rotation, bounds.max_rotation)).matrix
        scale = rng.uniform(*bounds.scale_range)
        shear = rng.uniform(-bounds.max_shear, bounds.max_shear)
        matrix = rotation @ np.array([[1.0, 0.0], [shear, 1.0]]) @ (scale * np.eye(2))
        translation = rng.uniform(-bounds.max_translation, bounds.max_translation, size=2)
        return cls(matrix, translation)


def _canvas(image: np.ndarray) -> np.ndarray:
    if image.shape == (TRANSLATED_CANVAS, TRANSLATED_CANVAS):
        return image
    height, width = image.shape
    return place(image, TRANSLATED_CANVAS, (TRANSLATED_CANVAS - height) // 2, (TRANSLATED_CANVAS - width) // 2)


def apply_affine(image: np.ndarray, params: AffineParams) -> np.ndarray:
    """
    Transform a digit with bilinear resampling.

    :param image:  A 28x28 digit, centred on the canvas first, or a 40x40 canvas
    :param params: The transform
    :return:       40x40 uint8 canvas
    :raises AffineRejected: Some non-zero pixel would land outside the canvas
    """
    canvas = _canvas(image).astype(np.float64)
    centre = np.full(2, (TRANSLATED_CANVAS - 1) / 2)
    on_pixels = np.argwhere(canvas > 0)
    landing = (on_pixels - centre) @ params.matrix.T + centre + params.translation
    if len(landing) and (landing.min() < 0 or landing.max() > TRANSLATED_CANVAS - 1):
        raise AffineRejected(1)
    inverse = np.linalg.inv(params.matrix)
    offset = centre - inverse @ (centre + params.translation)
    resampled = ndimage.affine_transform(canvas, inverse, offset=offset, output_shape=canvas.shape, order=1,
                                         mode="constant", cval=0.0, prefilter=False)
    return np.clip(np.rint(resampled), 0, 255).astype(np.uint8)


def affine_sample(image: np.ndarray, rng: Optional[np.random.Generator] = None,
                  bounds: AffineBounds = AffineBounds(), params: Optional[AffineParams] = None) -> np.ndarray:
    """
    A random small affine transform of a digit.

    Transforms that push the digit off the canvas are drawn again, up to `bounds.max_attempts` times.  With
    explicit `params` there is a single attempt.

    :raises AffineRejected: Every attempt was rejected
    """
    if params is not None:
        return apply_affine(image, params)
    rng = rng if rng is not None else np.random.default_rng()
    for attempt in range(bounds.max_attempts):
        try:
            return apply_affine(image, AffineParams.sample(rng, bounds))
        except AffineRejected:
            logger.debug("Affine transform rejected on attempt %d", attempt + 1)
    raise AffineRejected(bounds.max_attempts)


def affine_test_set(base: ImageSet, seed: int, bounds: AffineBounds = AffineBounds()) -> ImageSet:
    """
    One transformed copy of every digit, each drawn from its own stream seeded by (seed, index).

    :return: 40x40 images with the base labels
    """
    images = np.zeros((len(base), TRANSLATED_CANVAS, TRANSLATED_CANVAS), dtype=np.uint8)
    for index in range(len(base)):
        images[index] = affine_sample(base.images[index], np.random.default_rng([seed, index]), bounds)
    logger.info("Generated %d affine test images from %s (bounds %s)", len(base), base.name, bounds)
    return ImageSet(images, base.labels.copy(), f"{base.name}-affine")
