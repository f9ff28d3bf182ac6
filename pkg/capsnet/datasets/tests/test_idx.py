#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import gzip
import struct
import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from capsnet.datasets.exceptions import CountMismatch, InvalidLabel, TruncatedFile, WrongMagic
from capsnet.datasets.idx import ImageSet, load_idx, load_split, write_idx
from capsnet.tests.factories import digit_set, write_mnist


class TestLoadIdx(TestCase):
    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)
        self.images_path = self.root / "images"
        self.labels_path = self.root / "labels"

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_round_trip(self):
        """Ensures images and labels read back as written"""
        digits = digit_set(12)
        write_idx(digits, self.images_path, self.labels_path)
        loaded = load_idx(self.images_path, self.labels_path)
        np.testing.assert_array_equal(loaded.images, digits.images)
        np.testing.assert_array_equal(loaded.labels, digits.labels)
        assert loaded.image_size == (28, 28)
        assert loaded[3].label == 3

    def test_load_split(self):
        """Ensures the published file names are used for each split"""
        write_mnist(self.root, digit_set(8), digit_set(4, seed=1))
        assert len(load_split(self.root, "train")) == 8
        test = load_split(self.root, "test")
        assert len(test) == 4
        assert test.name == "test"

    def test_unknown_split(self):
        """Ensures only train and test are known splits"""
        self.assertRaises(ValueError, load_split, self.root, "validation")

    def test_gzipped_files(self):
        """Ensures a gzipped file is read when the plain one is missing"""
        digits = digit_set(5)
        write_idx(digits, self.images_path, self.labels_path)
        gzipped = self.root / "images.gz"
        gzipped.write_bytes(gzip.compress(self.images_path.read_bytes()))
        self.images_path.unlink()
        np.testing.assert_array_equal(load_idx(self.images_path, self.labels_path).images, digits.images)

    def test_wrong_magic(self):
        """Ensures a labels file given as images is rejected by its magic number"""
        write_idx(digit_set(20), self.images_path, self.labels_path)
        with self.assertRaises(WrongMagic) as raised:
            load_idx(self.labels_path, self.labels_path)
        assert raised.exception.expected == "0x803"
        assert raised.exception.actual == "0x801"

    def test_truncated(self):
        """Ensures a file shorter than its header announces is rejected"""
        write_idx(digit_set(3), self.images_path, self.labels_path)
        self.images_path.write_bytes(self.images_path.read_bytes()[:-1])
        self.assertRaises(TruncatedFile, load_idx, self.images_path, self.labels_path)
        self.images_path.write_bytes(b"\x00\x00")
        self.assertRaises(TruncatedFile, load_idx, self.images_path, self.labels_path)

    def test_count_mismatch(self):
        """Ensures the two files must hold the same number of items"""
        write_idx(digit_set(3), self.images_path, self.labels_path)
        self.labels_path.write_bytes(struct.pack(">2i", 0x801, 2) + bytes([0, 1]))
        self.assertRaises(CountMismatch, load_idx, self.images_path, self.labels_path)

    def test_invalid_label(self):
        """Ensures labels must be digits"""
        write_idx(digit_set(2), self.images_path, self.labels_path)
        self.labels_path.write_bytes(struct.pack(">2i", 0x801, 2) + bytes([3, 10]))
        self.assertRaises(InvalidLabel, load_idx, self.images_path, self.labels_path)


class TestImageSet(TestCase):

    def test_lengths_must_agree(self):
        """Ensures images and labels come in equal numbers"""
        self.assertRaises(CountMismatch, ImageSet, np.zeros((3, 28, 28), dtype=np.uint8), np.zeros(2, dtype=np.uint8))

    def test_classes(self):
        """Ensures the classes present are listed once each"""
        assert digit_set(9, classes=3).classes == [0, 1, 2]

    def test_slicing(self):
        """Ensures slices are refused in favour of subset()"""
        self.assertRaises(TypeError, lambda: digit_set(4)[1:3])

    def test_subset_prefix(self):
        """Ensures a subset without a seed keeps the first images"""
        digits = digit_set(10)
        subset = digits.subset(4)
        np.testing.assert_array_equal(subset.images, digits.images[:4])
        assert digits.subset(None) is digits
        assert digits.subset(50) is digits

    def test_subset_seeded(self):
        """Ensures a seeded subset is a reproducible sorted draw"""
        digits = digit_set(30)
        first, second = digits.subset(7, seed=5), digits.subset(7, seed=5)
        np.testing.assert_array_equal(first.images, second.images)
        assert len(first) == 7

    def test_normalized(self):
        """Ensures normalized pixels lie in [0, 1]"""
        pixels = digit_set(1)[0].normalized()
        assert pixels.dtype == np.float32
        assert pixels.max() <= 1.0
        assert pixels.min() == 0.0
