#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import numpy as np
from PIL import Image

from capsnet.evaluation.diagnostics import PerturbationGrid, SegmentationResult
from capsnet.utils.atomic_write.atomic_write import atomic_write

TILE_PADDING = 1
OVERLAY_SCALE = 4
BACKGROUND_WEIGHT = 0.35


def to_bytes(intensities: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(intensities, dtype=np.float64) * 255), 0, 255).astype(np.uint8)


def tile_grid(tiles: np.ndarray, padding: int = TILE_PADDING) -> Image.Image:
    """
    Lay out [rows, columns, height, width] intensities in [0, 1] as one grayscale image, tiles separated by
    `padding` black pixels.
    """
    rows, columns, height, width = tiles.shape
    canvas = Image.new("L", (columns * (width + padding) + padding, rows * (height + padding) + padding), 0)
    for row in range(rows):
        for column in range(columns):
            tile = Image.fromarray(to_bytes(tiles[row, column]))
            canvas.paste(tile, (padding + column * (width + padding), padding + row * (height + padding)))
    return canvas


def perturbation_image(grid: PerturbationGrid) -> Image.Image:
    """One row per dimension, one column per offset"""
    return tile_grid(grid.reconstructions)


def segmentation_image(result: SegmentationResult, scale: int = OVERLAY_SCALE) -> Image.Image:
    """
    The composite next to the two reconstructions drawn over it, the first in red and the second in green; pixels
    of both digits come out yellow.
    """
    composite = np.asarray(result.composite, dtype=np.float64)
    overlay = np.repeat(composite[:, :, None] * BACKGROUND_WEIGHT, 3, axis=2)
    for channel, reconstruction in enumerate(result.reconstructions[:2]):
        overlay[:, :, channel] = np.maximum(overlay[:, :, channel], reconstruction)
    left = Image.fromarray(to_bytes(composite)).convert("RGB")
    right = Image.fromarray(to_bytes(overlay))
    height, width = composite.shape
    side_by_side = Image.new("RGB", (2 * width + TILE_PADDING, height), (0, 0, 0))
    side_by_side.paste(left, (0, 0))
    side_by_side.paste(right, (width + TILE_PADDING, 0))
    return side_by_side.resize((side_by_side.width * scale, side_by_side.height * scale), Image.Resampling.NEAREST)


def save_png(image: Image.Image, path) -> None:
    with atomic_write(path) as stream:
        image.save(stream, format="PNG")
