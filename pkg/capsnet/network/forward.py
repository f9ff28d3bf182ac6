#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from dataclasses import dataclass
from typing import Optional

import numpy as np

from capsnet.autodiff.ops import activation, conv2d, dense, reshape, take
from capsnet.autodiff.tensor import Function, Graph, Tensor, as_tensor
from capsnet.capsules.layers import primary_capsules
from capsnet.capsules.routing import RoutingState, RoutingTrace, orphan_extend, predict, route, vector_length
from capsnet.network.exceptions import ClassOutOfRange, InputShapeError
from capsnet.network.models import CapsNetModel


@dataclass
class ForwardResult:
    digit_caps: Tensor
    lengths: Tensor
    trace: RoutingTrace
    state: RoutingState
    reconstruction: Optional[Tensor] = None


class MaskRows(Function):
    def forward(self, v, keep=0):
        self.keep = keep
        masked = np.zeros_like(v)
        masked[keep] = v[keep]
        return masked

    def backward(self, grad):
        masked = np.zeros_like(grad)
        masked[self.keep] = grad[self.keep]
        return masked,


def forward(model: CapsNetModel, image, graph: Optional[Graph] = None, iterations: Optional[int] = None,
            decode_class: Optional[int] = None) -> ForwardResult:
    """
    Conv1 (ReLU) -> PrimaryCapsules -> DigitCaps with routing.

    :param model:        The network
    :param image:        [input_size, input_size] pixels in [0, 1]
    :param graph:        Record on this graph for training; inference when omitted
    :param iterations:   Routing iterations, the architecture's default when omitted
    :param decode_class: Also reconstruct the image from this digit capsule
    :return:             Digit capsules [10, 16], their lengths [10] and the routing trace
    """
    architecture = model.architecture
    size = architecture.input_size
    pixels = np.asarray(image.data if isinstance(image, Tensor) else image, dtype=model.dtype)
    if pixels.shape != (size, size):
        raise InputShapeError((size, size), pixels.shape)
    params = model.bind(graph)

    x = Tensor(pixels.reshape(1, size, size))
    features = activation(conv2d(x, params["conv1.weight"], params["conv1.bias"], stride=1), "relu")
    primary = primary_capsules(features, params["primary.weight"], params["primary.bias"],
                               types=architecture.primary_types, dim=architecture.primary_dim,
                               stride=architecture.primary_stride)
    predictions = predict(primary, params["digit.weight"])
    if architecture.orphan:
        predictions = orphan_extend(predictions)
    if iterations is None:
        iterations = architecture.routing_iterations
    v, state, trace = route(predictions, iterations, params.get("routing.priors"))
    if architecture.orphan:
        v = take(v, range(architecture.num_classes))
    result = ForwardResult(digit_caps=v, lengths=vector_length(v), trace=trace, state=state)
    if decode_class is not None:
        result.reconstruction = mask_and_decode(model, v, decode_class, graph)
    return result


def mask_and_decode(model: CapsNetModel, v, target_class: int, graph: Optional[Graph] = None) -> Tensor:
    """
    Reconstruct an image from one digit capsule.

    Every row of `v` but `target_class` is zeroed, the result is flattened and passed through
    dense+ReLU, dense+ReLU, dense+sigmoid.

    :param model:        The network whose decoder to use
    :param v:            Digit capsules [num_classes, digit_dim], a tensor or a raw array
    :param target_class: The capsule to keep
    :param graph:        Record on this graph for training
    :return:             [input_size ** 2] intensities in (0, 1)
    """
    architecture = model.architecture
    if not 0 <= target_class < architecture.num_classes:
        raise ClassOutOfRange(target_class, architecture.num_classes)
    params = model.bind(graph)
    masked = MaskRows.apply(as_tensor(v, dtype=model.dtype), keep=int(target_class))
    hidden = reshape(masked, (architecture.num_classes * architecture.digit_dim,))
    hidden = activation(dense(hidden, params["decoder.0.weight"], params["decoder.0.bias"]), "relu")
    hidden = activation(dense(hidden, params["decoder.1.weight"], params["decoder.1.bias"]), "relu")
    return activation(dense(hidden, params["decoder.2.weight"], params["decoder.2.bias"]), "sigmoid")
