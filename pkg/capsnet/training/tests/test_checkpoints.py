#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from capsnet.network.forward import forward
from capsnet.network.models import Architecture, CapsNetModel
from capsnet.tests.factories import digit_set
from capsnet.training.checkpoints import load_checkpoint, save_checkpoint
from capsnet.training.exceptions import CheckpointFormatError, MissingOptimizerState, UnknownTensorName
from capsnet.training.optim import OptimizerState


class TestCheckpoints(TestCase):
    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / "model.cps"
        self.model = CapsNetModel.initialize(Architecture.tiny(orphan=True, learnable_priors=True, m_plus=0.95),
                                             seed=4)
        self.optimizer = OptimizerState.zeros(self.model.parameters)
        for name, moment in self.optimizer.first_moments.items():
            moment += 0.25
            self.optimizer.second_moments[name] += 0.5
        self.optimizer.step = 7

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_round_trip(self):
        """Ensures a loaded checkpoint gives bit-identical forward passes"""
        rng = np.random.default_rng(11)
        save_checkpoint(self.path, self.model, self.optimizer, step=7, rng=rng)
        checkpoint = load_checkpoint(self.path)
        image = digit_set(1, size=24)[0].normalized()
        np.testing.assert_array_equal(forward(checkpoint.model(), image).digit_caps.data,
                                      forward(self.model, image).digit_caps.data)
        assert checkpoint.architecture == self.model.architecture
        assert checkpoint.step == 7

    def test_optimizer_and_generator(self):
        """Ensures optimizer moments and the random generator survive a round trip"""
        rng = np.random.default_rng(11)
        save_checkpoint(self.path, self.model, self.optimizer, step=7, rng=rng)
        checkpoint = load_checkpoint(self.path)
        state = checkpoint.optimizer_state()
        np.testing.assert_array_equal(state.first_moments["digit.weight"], self.optimizer.first_moments["digit.weight"])
        np.testing.assert_array_equal(state.second_moments["conv1.bias"], self.optimizer.second_moments["conv1.bias"])
        assert state.step == 7
        np.testing.assert_array_equal(checkpoint.generator().random(5), rng.random(5))

    def test_evaluation_only(self):
        """Ensures a checkpoint without optimizer state loads but cannot resume training"""
        save_checkpoint(self.path, self.model)
        checkpoint = load_checkpoint(self.path)
        assert checkpoint.optimizer is None
        self.assertRaises(MissingOptimizerState, checkpoint.optimizer_state)

    def test_flipped_magic(self):
        """Ensures a file with the wrong magic is rejected"""
        save_checkpoint(self.path, self.model)
        self.path.write_bytes(b"SPC1" + self.path.read_bytes()[4:])
        with self.assertRaises(CheckpointFormatError) as raised:
            load_checkpoint(self.path)
        assert "magic" in str(raised.exception)

    def test_unknown_tensor(self):
        """Ensures a tensor the model has no place for is reported by name"""
        save_checkpoint(self.path, self.model)
        self.path.write_bytes(self.path.read_bytes().replace(b"conv1.bias", b"conv9.bias"))
        with self.assertRaises(UnknownTensorName) as raised:
            load_checkpoint(self.path)
        assert "conv9.bias" in str(raised.exception)

    def test_truncated(self):
        """Ensures a truncated file is rejected"""
        save_checkpoint(self.path, self.model, self.optimizer)
        self.path.write_bytes(self.path.read_bytes()[:-40])
        self.assertRaises(CheckpointFormatError, load_checkpoint, self.path)

    def test_trailing_bytes(self):
        """Ensures bytes after the generator state are rejected"""
        save_checkpoint(self.path, self.model)
        self.path.write_bytes(self.path.read_bytes() + b"\x00")
        self.assertRaises(CheckpointFormatError, load_checkpoint, self.path)

    def test_unsupported_version(self):
        """Ensures only version 1 is read"""
        save_checkpoint(self.path, self.model)
        content = bytearray(self.path.read_bytes())
        content[4] = 2
        self.path.write_bytes(bytes(content))
        self.assertRaises(CheckpointFormatError, load_checkpoint, self.path)
