#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from unittest import TestCase

import numpy as np

from capsnet.datasets.affine import AffineBounds, AffineParams, affine_sample, affine_test_set, apply_affine
from capsnet.datasets.augment import place
from capsnet.datasets.exceptions import AffineRejected
from capsnet.tests.factories import digit_set


class TestApplyAffine(TestCase):

    def setUp(self) -> None:
        self.image = digit_set(1)[0].pixels

    def test_identity_centres_the_digit(self):
        """Ensures the identity transform places the digit in the middle of the canvas"""
        np.testing.assert_array_equal(apply_affine(self.image, AffineParams.identity()), place(self.image, 40, 6, 6))

    def test_whole_pixel_translation(self):
        """Ensures a whole-pixel translation moves the digit without blurring it"""
        moved = apply_affine(self.image, AffineParams.translation_by(3, -2))
        np.testing.assert_array_equal(moved, place(self.image, 40, 9, 4))

    def test_quarter_turn_round_trip(self):
        """Ensures turning a quarter and back restores the digit"""
        turned = apply_affine(self.image, AffineParams.rotation(90))
        assert turned.astype(int).sum() == self.image.astype(int).sum()
        np.testing.assert_array_equal(apply_affine(turned, AffineParams.rotation(-90)), place(self.image, 40, 6, 6))

    def test_small_rotation_keeps_ink(self):
        """Ensures a small rotation roughly preserves the amount of ink"""
        turned = apply_affine(self.image, AffineParams.rotation(10))
        assert abs(turned.astype(int).sum() / self.image.astype(int).sum() - 1) < 0.1

    def test_off_canvas_rejected(self):
        """Ensures a transform pushing ink off the canvas is rejected"""
        self.assertRaises(AffineRejected, apply_affine, self.image, AffineParams.translation_by(20, 0))

    def test_orientation_preserved(self):
        """Ensures reflections are not valid transforms"""
        self.assertRaises(ValueError, AffineParams, np.diag([1.0, -1.0]), np.zeros(2))


class TestAffineSample(TestCase):

    def test_sample_within_bounds(self):
        """Ensures sampled transforms keep orientation and stay within the translation bound"""
        rng = np.random.default_rng(0)
        for _ in range(100):
            params = AffineParams.sample(rng)
            assert np.linalg.det(params.matrix) > 0
            assert np.abs(params.translation).max() <= 6

    def test_explicit_params(self):
        """Ensures explicit params are applied as given"""
        image = digit_set(1)[0].pixels
        np.testing.assert_array_equal(affine_sample(image, params=AffineParams.identity()), place(image, 40, 6, 6))

    def test_gives_up_after_max_attempts(self):
        """Ensures sampling raises once every attempt pushed the digit off the canvas"""
        bounds = AffineBounds(scale_range=(3.0, 3.0), max_attempts=4)
        with self.assertRaises(AffineRejected) as raised:
            affine_sample(np.full((28, 28), 200, dtype=np.uint8), np.random.default_rng(1), bounds)
        assert "4 attempts" in str(raised.exception)

    def test_bounds_from_settings(self):
        """Ensures the configured bounds match the defaults"""
        assert AffineBounds.from_settings() == AffineBounds()


class TestAffineTestSet(TestCase):

    def test_reproducible(self):
        """Ensures the same seed gives the same transformed set"""
        base = digit_set(6)
        first, second = affine_test_set(base, seed=3), affine_test_set(base, seed=3)
        np.testing.assert_array_equal(first.images, second.images)
        np.testing.assert_array_equal(first.labels, base.labels)
        assert first.image_size == (40, 40)
        assert first.name == "digits-affine"

    def test_prefix_does_not_change(self):
        """Ensures each digit's transform depends on its index only"""
        base = digit_set(6)
        np.testing.assert_array_equal(affine_test_set(base.subset(3), seed=3).images,
                                      affine_test_set(base, seed=3).images[:3])
