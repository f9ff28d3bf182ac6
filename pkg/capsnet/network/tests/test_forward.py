#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from unittest import TestCase

import numpy as np
from pytest import approx

from capsnet.autodiff.gradcheck import finite_difference_check
from capsnet.autodiff.tensor import Graph, Tensor
from capsnet.network.exceptions import ClassOutOfRange, EmptyTargetSet, InputShapeError
from capsnet.network.forward import forward, mask_and_decode
from capsnet.network.losses import margin_loss, reconstruction_loss, total_loss
from capsnet.network.models import Architecture, CapsNetModel


def _digit(size=24, seed=0):
    image = np.zeros((size, size), dtype=np.float32)
    rng = np.random.default_rng(seed)
    image[6:size - 6, 8:size - 8] = rng.uniform(0.2, 1.0, size=(size - 12, size - 16))
    return image


class TestForward(TestCase):

    def setUp(self) -> None:
        self.model = CapsNetModel.initialize(Architecture.tiny(), seed=1)

    def test_mnist_shapes(self):
        """Ensures a 28x28 digit gives ten 16D digit capsules"""
        model = CapsNetModel.initialize()
        result = forward(model, _digit(28))
        assert result.digit_caps.shape == (10, 16)
        assert result.lengths.shape == (10,)
        assert result.trace.final_couplings.shape == (1152, 10)

    def test_zero_image(self):
        """Ensures an all-zero image with zero biases has zero-length digit capsules"""
        result = forward(self.model, np.zeros((24, 24)))
        assert not result.lengths.data.any()

    def test_deterministic(self):
        """Ensures two forward passes on the same image are bit-identical"""
        first = forward(self.model, _digit())
        second = forward(self.model, _digit())
        np.testing.assert_array_equal(first.digit_caps.data, second.digit_caps.data)
        np.testing.assert_array_equal(first.trace.final_couplings, second.trace.final_couplings)

    def test_lengths_below_one(self):
        """Ensures digit-capsule lengths lie in [0, 1)"""
        lengths = forward(self.model, _digit()).lengths.data
        assert ((lengths >= 0) & (lengths < 1)).all()

    def test_routing_iterations(self):
        """Ensures the routing trace has one entry per iteration and the override wins"""
        assert len(forward(self.model, _digit()).trace.mean_logit_changes) == 3
        assert len(forward(self.model, _digit(), iterations=5).trace.mean_logit_changes) == 5

    def test_orphan_and_priors(self):
        """Ensures the orphan parent is routed to but not reported"""
        model = CapsNetModel.initialize(Architecture.tiny(orphan=True, learnable_priors=True))
        result = forward(model, _digit())
        assert result.lengths.shape == (10,)
        assert result.trace.final_couplings.shape == (32, 11)

    def test_input_shape(self):
        """Ensures the image must match the input size"""
        self.assertRaises(InputShapeError, forward, self.model, np.zeros((28, 28)))

    def test_inference_records_nothing(self):
        """Ensures a forward pass without a graph produces constants"""
        assert forward(self.model, _digit()).lengths.graph is None


class TestMaskAndDecode(TestCase):

    def setUp(self) -> None:
        self.model = CapsNetModel.initialize(Architecture.tiny(), seed=2)

    def test_only_target_row_matters(self):
        """Ensures the reconstruction depends on the target capsule only"""
        rng = np.random.default_rng(0)
        v = rng.standard_normal((10, 4)).astype(np.float32)
        other = rng.standard_normal((10, 4)).astype(np.float32)
        other[3] = v[3]
        np.testing.assert_array_equal(mask_and_decode(self.model, v, 3).data,
                                      mask_and_decode(self.model, other, 3).data)

    def test_output_range(self):
        """Ensures reconstructions are input-sized intensities in (0, 1)"""
        reconstruction = mask_and_decode(self.model, np.ones((10, 4)), 0).data
        assert reconstruction.shape == (576,)
        assert ((reconstruction > 0) & (reconstruction < 1)).all()

    def test_decoder_gradient(self):
        """Ensures gradients through the masked dense stack agree with finite differences"""
        shadow = self.model.shadow()
        names = ["decoder.0.weight", "decoder.0.bias", "decoder.1.weight", "decoder.2.weight", "decoder.2.bias"]
        v = Tensor(np.random.default_rng(1).uniform(-0.5, 0.5, size=(10, 4)), dtype=np.float64)
        image = _digit().astype(np.float64)

        def build(capsules, *tensors):
            parameters = dict(shadow.parameters)
            parameters.update(zip(names, tensors))
            model = CapsNetModel(shadow.architecture, parameters)
            return reconstruction_loss(mask_and_decode(model, capsules, 6), image)

        error = finite_difference_check(build, [v, *(shadow.parameters[name] for name in names)], epsilon=1e-5)
        assert error < 1e-4

    def test_class_out_of_range(self):
        """Ensures the target class must name a digit capsule"""
        self.assertRaises(ClassOutOfRange, mask_and_decode, self.model, np.ones((10, 4)), 10)

    def test_decode_during_forward(self):
        """Ensures forward can reconstruct from a chosen capsule"""
        result = forward(self.model, _digit(), decode_class=4)
        np.testing.assert_array_equal(result.reconstruction.data,
                                      mask_and_decode(self.model, result.digit_caps.data, 4).data)


class TestLosses(TestCase):

    def test_margin_at_the_margins(self):
        """Ensures a present class at 0.9 and absent classes at 0.1 cost nothing"""
        lengths = np.full(10, 0.1)
        lengths[2] = 0.9
        assert margin_loss(Tensor(lengths, dtype=np.float64), {2}).item() == 0

    def test_margin_values(self):
        """Ensures a missing present class costs 0.81 and a fully active absent class costs 0.405"""
        assert margin_loss(Tensor(np.zeros(10), dtype=np.float64), {7}).item() == approx(0.81)
        lengths = np.zeros(10)
        lengths[4] = 1.0
        assert margin_loss(Tensor(lengths, dtype=np.float64), {0}).item() == approx(0.81 + 0.405)

    def test_margin_two_present_classes(self):
        """Ensures every present class contributes"""
        assert margin_loss(Tensor(np.zeros(10), dtype=np.float64), {1, 8}).item() == approx(1.62)

    def test_margin_gradient(self):
        """Ensures the margin loss gradient agrees with finite differences on both sides of both margins"""
        lengths = Tensor([0.05, 0.3, 0.95, 0.6, 0.12, 0.85, 0.5, 0.02, 0.7, 0.4], dtype=np.float64)
        error = finite_difference_check(lambda tensor: margin_loss(tensor, {2, 5}), [lengths], epsilon=1e-5)
        assert error < 1e-6

    def test_margin_targets(self):
        """Ensures the target set is non-empty and in range"""
        self.assertRaises(EmptyTargetSet, margin_loss, Tensor(np.zeros(10)), set())
        self.assertRaises(ClassOutOfRange, margin_loss, Tensor(np.zeros(10)), {10})

    def test_reconstruction_loss(self):
        """Ensures a perfect reconstruction costs nothing and 0.1 off on 784 pixels costs 7.84"""
        image = np.full((28, 28), 0.5)
        assert reconstruction_loss(Tensor(np.full(784, 0.5), dtype=np.float64), image).item() == 0
        loss = reconstruction_loss(Tensor(np.full(784, 0.6), dtype=np.float64), image).item()
        assert loss == approx(7.84)

    def test_total_is_margin_plus_scaled_reconstruction(self):
        """Ensures the total loss combines its parts with the reconstruction scale"""
        model = CapsNetModel.initialize(Architecture.tiny(), seed=3)
        breakdown = total_loss(model, _digit(), {5})
        assert breakdown.reconstruction > 0
        assert breakdown.total == approx(breakdown.margin + 0.0005 * breakdown.reconstruction)
        assert breakdown.objective.item() == approx(breakdown.total, rel=1e-5)

    def test_total_in_model_dtype(self):
        """Ensures the reported total is the float32 objective, not a float64 sum of its parts"""
        model = CapsNetModel.initialize(Architecture.tiny(), seed=3)
        breakdown = total_loss(model, _digit(), {5})
        assert breakdown.objective.dtype == np.float32
        assert breakdown.total == breakdown.objective.item()
        scaled = np.multiply(np.float32(breakdown.reconstruction), 0.0005, dtype=np.float32)
        assert breakdown.total == float(np.add(np.float32(breakdown.margin), scaled, dtype=np.float32))

    def test_total_without_reconstruction(self):
        """Ensures a zero scale reduces the total to the margin loss"""
        model = CapsNetModel.initialize(Architecture.tiny(), seed=3)
        breakdown = total_loss(model, _digit(), {5}, reconstruction_scale=0)
        assert breakdown.reconstruction == 0
        assert breakdown.total == breakdown.margin

    def test_total_sums_reconstruction_targets(self):
        """Ensures each reconstruction target adds its own loss"""
        model = CapsNetModel.initialize(Architecture.tiny(), seed=4)
        first, second = _digit(seed=1), _digit(seed=2)
        composite = np.clip(first + second, 0, 1)
        breakdown = total_loss(model, composite, {1, 6}, reconstruction_targets=[(1, first), (6, second)])
        digit_caps = breakdown.result.digit_caps.data
        expected = (reconstruction_loss(mask_and_decode(model, digit_caps, 1), first).item() +
                    reconstruction_loss(mask_and_decode(model, digit_caps, 6), second).item())
        assert breakdown.reconstruction == approx(expected, rel=1e-5)

    def test_end_to_end_gradient(self):
        """Ensures gradients of the whole objective agree with finite differences"""
        shadow = CapsNetModel.initialize(Architecture.tiny(), seed=5).shadow()
        names = ["primary.weight", "digit.weight", "decoder.2.weight"]
        image = _digit().astype(np.float64)

        def build(*tensors):
            parameters = dict(shadow.parameters)
            parameters.update(zip(names, tensors))
            model = CapsNetModel(shadow.architecture, parameters)
            return total_loss(model, image, {3}, reconstruction_scale=0.05).objective

        error = finite_difference_check(build, [shadow.parameters[name] for name in names], epsilon=1e-4)
        assert error < 1e-3

    def test_gradients_reach_every_parameter(self):
        """Ensures one backward pass gives every parameter a gradient of its own shape"""
        model = CapsNetModel.initialize(Architecture.tiny(), seed=6)
        graph = Graph()
        breakdown = total_loss(model, _digit(), {2}, graph=graph)
        graph.backward(breakdown.objective)
        for name, parameter in model.parameters.items():
            assert graph.gradient(parameter).shape == parameter.shape, name
        assert graph.gradient(model.parameters["digit.weight"]).any()
