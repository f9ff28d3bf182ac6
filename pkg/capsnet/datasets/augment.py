#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import numpy as np

TRANSLATED_CANVAS = 40
DEFAULT_MAX_SHIFT = 2


def shift(image: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """
    Translate an image by whole pixels with zero padding.

    The pixel at column x, row y moves to column x + dx, row y + dy; pixels pushed past the border are dropped.
    """
    height, width = image.shape
    shifted = np.zeros_like(image)
    if abs(dx) >= width or abs(dy) >= height:
        return shifted
    shifted[max(0, dy):height + min(0, dy), max(0, dx):width + min(0, dx)] = \
        image[max(0, -dy):height - max(0, dy), max(0, -dx):width - max(0, dx)]
    return shifted


def shift_augment(image: np.ndarray, max_shift: int = DEFAULT_MAX_SHIFT, rng: np.random.Generator = None) -> np.ndarray:
    """
    Shift by (dx, dy) drawn uniformly from [-max_shift, max_shift]^2.

    :param image:     A 2-D image
    :param max_shift: Largest shift in each direction, 0 for none
    :param rng:       Source of the shift, advanced by one draw of two integers
    """
    if max_shift < 0:
        raise ValueError("max_shift must not be negative")
    rng = rng if rng is not None else np.random.default_rng()
    dx, dy = rng.integers(-max_shift, max_shift + 1, size=2)
    return shift(image, int(dx), int(dy))


def place(image: np.ndarray, canvas_size: int, top: int, left: int) -> np.ndarray:
    """Copy an image onto a blank square canvas with its top-left corner at (top, left)"""
    height, width = image.shape
    if not (0 <= top <= canvas_size - height and 0 <= left <= canvas_size - width):
        raise ValueError(f"A {height}x{width} image at ({top}, {left}) does not fit a {canvas_size} canvas")
    canvas = np.zeros((canvas_size, canvas_size), dtype=image.dtype)
    canvas[top:top + height, left:left + width] = image
    return canvas


def pad_translate_40(image: np.ndarray, rng: np.random.Generator = None,
                     canvas_size: int = TRANSLATED_CANVAS) -> np.ndarray:
    """
    Put a digit at a uniformly random position of a black 40x40 canvas, fully contained.

    For 28x28 digits both offsets are drawn from 0..12.
    """
    rng = rng if rng is not None else np.random.default_rng()
    height, width = image.shape
    top = int(rng.integers(0, canvas_size - height + 1))
    left = int(rng.integers(0, canvas_size - width + 1))
    return place(image, canvas_size, top, left)
