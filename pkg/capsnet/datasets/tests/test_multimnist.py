#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import struct
import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from capsnet.datasets.exceptions import (CountMismatch, InvalidPerDigit, TooFewClasses, TruncatedFile,
                                         UnsupportedVersion, WrongMagic)
from capsnet.exceptions import InvalidArgument
from capsnet.datasets.multimnist import (RECORD_DTYPE, MultiMnistSet, compose, generate_multimnist,
                                         multimnist_size, overlap_statistics, read_multimnist, source_digit,
                                         write_multimnist)
from capsnet.tests.factories import digit_set


class TestGenerateMultiMnist(TestCase):

    def setUp(self) -> None:
        self.base = digit_set(12)
        self.composites = generate_multimnist(self.base, per_digit=3, seed=7)

    def test_size(self):
        """Ensures every base digit gets per_digit composites, and 60K digits at 1K each give 60M"""
        assert len(self.composites) == 36
        assert multimnist_size(60_000, 1_000) == 60_000_000

    def test_labels_differ(self):
        """Ensures the two digits of every composite have different classes"""
        for example in self.composites:
            assert example.labels[0] != example.labels[1]
            assert len(example.label_set) == 2

    def test_provenance(self):
        """Ensures labels, indices and shifts describe how each composite was made"""
        for position, example in enumerate(self.composites):
            assert example.indices[0] == position // 3
            for which in range(2):
                assert example.labels[which] == self.base.labels[example.indices[which]]
                assert all(-4 <= value <= 4 for value in example.shifts[which])
            np.testing.assert_array_equal(example.pixels, compose(self.base, example))

    def test_pixels_are_clipped_sum(self):
        """Ensures overlapping ink saturates at 255"""
        example = self.composites[0]
        expected = np.minimum(source_digit(self.base, example, 0).astype(int)
                              + source_digit(self.base, example, 1).astype(int), 255)
        np.testing.assert_array_equal(example.pixels, expected)
        assert example.pixels.shape == (36, 36)

    def test_reproducible(self):
        """Ensures the same seed gives bit-identical sets, whatever the number of workers"""
        assert generate_multimnist(self.base, per_digit=3, seed=7) == self.composites
        assert generate_multimnist(self.base, per_digit=3, seed=7, workers=3) == self.composites
        assert generate_multimnist(self.base, per_digit=3, seed=8) != self.composites

    def test_single_class(self):
        """Ensures a base set with one class cannot be overlaid"""
        self.assertRaises(TooFewClasses, generate_multimnist, digit_set(5, classes=1))

    def test_per_digit_at_least_one(self):
        """Ensures at least one composite per digit is requested"""
        self.assertRaises(InvalidPerDigit, generate_multimnist, self.base, 0)
        assert issubclass(InvalidPerDigit, InvalidArgument)

    def test_overlap_statistics(self):
        """Ensures overlap measures are fractions and the smaller-box measure dominates IoU"""
        statistics = overlap_statistics(self.base, self.composites)
        assert statistics.counted == 36
        assert 0 <= statistics.intersection_over_union <= statistics.box_overlap <= 1

    def test_subset(self):
        """Ensures a subset keeps the first composites"""
        subset = self.composites.subset(5)
        assert len(subset) == 5
        np.testing.assert_array_equal(subset[4].pixels, self.composites[4].pixels)


class TestMultiMnistFile(TestCase):

    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / "multi.mmn"
        self.composites = generate_multimnist(digit_set(8), per_digit=2, seed=1)

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_round_trip(self):
        """Ensures a written set reads back equal"""
        write_multimnist(self.composites, self.path)
        assert read_multimnist(self.path) == self.composites

    def test_empty_set(self):
        """Ensures an empty set gives a valid file with count 0"""
        write_multimnist(MultiMnistSet(np.zeros(0, dtype=RECORD_DTYPE)), self.path)
        assert len(read_multimnist(self.path)) == 0

    def test_count_larger_than_payload(self):
        """Ensures a count announcing more records than the file holds is rejected"""
        self.__write_with_count(len(self.composites) + 1)
        self.assertRaises(TruncatedFile, read_multimnist, self.path)

    def test_count_smaller_than_payload(self):
        """Ensures a count announcing fewer records than the file holds is rejected"""
        self.__write_with_count(len(self.composites) - 1)
        self.assertRaises(CountMismatch, read_multimnist, self.path)

    def test_wrong_magic(self):
        """Ensures a file must start with the MultiMNIST magic"""
        write_multimnist(self.composites, self.path)
        self.path.write_bytes(b"XXXX" + self.path.read_bytes()[4:])
        self.assertRaises(WrongMagic, read_multimnist, self.path)

    def test_unknown_version(self):
        """Ensures only version 1 is read"""
        write_multimnist(self.composites, self.path)
        content = bytearray(self.path.read_bytes())
        content[4:8] = struct.pack("<I", 2)
        self.path.write_bytes(bytes(content))
        self.assertRaises(UnsupportedVersion, read_multimnist, self.path)

    def test_short_header(self):
        """Ensures a file shorter than the header is rejected"""
        self.path.write_bytes(b"MMN1")
        self.assertRaises(TruncatedFile, read_multimnist, self.path)

    def __write_with_count(self, count):
        write_multimnist(self.composites, self.path)
        content = bytearray(self.path.read_bytes())
        content[8:16] = struct.pack("<Q", count)
        self.path.write_bytes(bytes(content))
