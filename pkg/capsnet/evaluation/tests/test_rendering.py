#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np
from PIL import Image

from capsnet.evaluation.diagnostics import perturb_dimensions, segment
from capsnet.evaluation.rendering import perturbation_image, save_png, segmentation_image, tile_grid, to_bytes
from capsnet.network.models import Architecture, CapsNetModel
from capsnet.tests.factories import digit_set


class TestRendering(TestCase):

    def test_to_bytes(self):
        """Ensures intensities are scaled to bytes and clipped"""
        np.testing.assert_array_equal(to_bytes([0.0, 0.5, 1.0, 1.5, -1.0]), [0, 128, 255, 255, 0])

    def test_tile_grid(self):
        """Ensures tiles are laid out with padding between them"""
        image = tile_grid(np.ones((2, 3, 4, 5)))
        assert image.size == (3 * 6 + 1, 2 * 5 + 1)
        assert image.getpixel((1, 1)) == 255
        assert image.getpixel((0, 0)) == 0

    def test_diagnostic_images(self):
        """Ensures the perturbation grid and the segmentation overlay have the expected sizes"""
        model = CapsNetModel.initialize(Architecture.tiny(), seed=1)
        image = digit_set(1, size=24)[0].normalized()
        grid = perturbation_image(perturb_dimensions(model, image, target_class=0))
        assert grid.size == (11 * 25 + 1, 4 * 25 + 1)
        overlay = segmentation_image(segment(model, image))
        assert overlay.mode == "RGB"
        assert overlay.size == ((2 * 24 + 1) * 4, 24 * 4)

    def test_save_png(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "tiles.png"
            save_png(tile_grid(np.zeros((1, 1, 3, 3))), path)
            with Image.open(path) as image:
                assert image.format == "PNG"
                assert image.size == (5, 5)
