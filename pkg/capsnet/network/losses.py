#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from capsnet.autodiff.exceptions import ShapeMismatch
from capsnet.autodiff.ops import add, scale
from capsnet.autodiff.tensor import Function, Graph, Tensor, as_tensor
from capsnet.network.exceptions import ClassOutOfRange, EmptyTargetSet
from capsnet.network.forward import ForwardResult, forward, mask_and_decode
from capsnet.network.models import CapsNetModel

M_PLUS = 0.9
M_MINUS = 0.1
DOWN_WEIGHT = 0.5


@dataclass
class LossBreakdown:
    """
    margin + scale * reconstruction.  `reconstruction` is the unscaled sum of squared differences; `objective` is
    the scalar tensor to call backward() on and `total` its value, summed in the model dtype.
    """
    margin: float
    reconstruction: float
    total: float
    objective: Tensor
    result: ForwardResult


class MarginLoss(Function):
    def forward(self, lengths, present=None, m_plus=M_PLUS, m_minus=M_MINUS, down_weight=DOWN_WEIGHT):
        self.present = present
        self.below = np.maximum(0, m_plus - lengths)
        self.above = np.maximum(0, lengths - m_minus)
        self.down_weight = down_weight
        losses = present * self.below ** 2 + down_weight * (1 - present) * self.above ** 2
        return np.asarray(losses.sum(), dtype=lengths.dtype)

    def backward(self, grad):
        present = self.present
        return grad * (-2 * present * self.below + 2 * self.down_weight * (1 - present) * self.above),


class SquaredError(Function):
    def forward(self, a, b):
        self.difference = a - b
        return np.asarray((self.difference ** 2).sum(), dtype=a.dtype)

    def backward(self, grad):
        return 2 * grad * self.difference, -2 * grad * self.difference


def margin_loss(lengths: Tensor, targets: Iterable[int], m_plus: float = M_PLUS, m_minus: float = M_MINUS,
                down_weight: float = DOWN_WEIGHT) -> Tensor:
    """
    Sum over classes of T_k max(0, m+ - |v_k|)^2 + lambda (1 - T_k) max(0, |v_k| - m-)^2.

    Several classes may be present at once (MultiMNIST).

    :param lengths: Digit-capsule lengths [num_classes]
    :param targets: The present classes
    :return:        A scalar tensor
    """
    targets = set(int(target) for target in targets)
    if not targets:
        raise EmptyTargetSet()
    num_classes = lengths.shape[0]
    for target in targets:
        if not 0 <= target < num_classes:
            raise ClassOutOfRange(target, num_classes)
    present = np.zeros(num_classes, dtype=lengths.dtype)
    present[sorted(targets)] = 1
    return MarginLoss.apply(lengths, present=present, m_plus=m_plus, m_minus=m_minus, down_weight=down_weight)


def reconstruction_loss(reconstruction: Tensor, image) -> Tensor:
    """Sum of squared differences between a reconstruction and the flattened image"""
    image = as_tensor(image, dtype=reconstruction.dtype)
    if reconstruction.size != image.size:
        raise ShapeMismatch("reconstruction_loss", "pixels", image.size, reconstruction.size)
    target = Tensor(image.data.reshape(reconstruction.shape)) if image.graph is None else image
    return SquaredError.apply(reconstruction, target)


def total_loss(model: CapsNetModel, image, targets: Iterable[int],
               reconstruction_targets: Optional[Sequence[Tuple[int, np.ndarray]]] = None,
               graph: Optional[Graph] = None, iterations: Optional[int] = None,
               reconstruction_scale: Optional[float] = None) -> LossBreakdown:
    """
    The training objective: margin loss plus the scaled reconstruction loss.

    Each reconstruction target pairs a class with the image its capsule should reproduce.  By default every present
    class reconstructs the input itself, which is the single-digit case; MultiMNIST passes each digit's own shifted
    source image so the two losses are summed.

    :param reconstruction_scale: Overrides the architecture's scale; 0 disables the decoder
    """
    architecture = model.architecture
    targets = sorted(set(int(target) for target in targets))
    scale_factor = architecture.reconstruction_scale if reconstruction_scale is None else reconstruction_scale
    result = forward(model, image, graph=graph, iterations=iterations)
    margin = margin_loss(result.lengths, targets, architecture.m_plus, architecture.m_minus,
                         architecture.down_weight)

    if reconstruction_targets is None:
        pixels = image.data if isinstance(image, Tensor) else image
        reconstruction_targets = [(target, pixels) for target in targets]
    if scale_factor == 0 or not reconstruction_targets:
        return LossBreakdown(margin=margin.item(), reconstruction=0.0, total=margin.item(), objective=margin,
                             result=result)

    reconstruction = None
    for target_class, target_image in reconstruction_targets:
        decoded = mask_and_decode(model, result.digit_caps, target_class, graph)
        loss = reconstruction_loss(decoded, np.asarray(target_image, dtype=model.dtype))
        reconstruction = loss if reconstruction is None else add(reconstruction, loss)
    objective = add(margin, scale(reconstruction, scale_factor))
    return LossBreakdown(margin=margin.item(), reconstruction=reconstruction.item(),
                         total=objective.item(), objective=objective,
                         result=result)
