#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

"""
Routing-by-agreement between one layer of capsules and the layer above it.

Shapes follow the convention [lower capsule i, upper capsule j, ...].  Every coupling row (fixed i) is a softmax
over the upper capsules j: each lower capsule distributes its output among the possible parents.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from capsnet.autodiff.exceptions import ShapeMismatch
from capsnet.autodiff.ops import add
from capsnet.autodiff.tensor import Function, Tensor
from capsnet.capsules.exceptions import InvalidRoutingIterations

SQUASH_EPSILON = 1e-8
DEFAULT_ROUTING_ITERATIONS = 3


@dataclass
class PredictionTensor:
    """The predictions û_j|i = W_ij u_i of every lower capsule for every upper capsule"""
    values: Tensor
    lower_dim: int

    @property
    def num_lower(self) -> int:
        return self.values.shape[0]

    @property
    def num_upper(self) -> int:
        return self.values.shape[1]

    @property
    def upper_dim(self) -> int:
        return self.values.shape[2]


@dataclass
class RoutingState:
    logits: Tensor
    couplings: Tensor
    priors: Tensor
    iterations: int


@dataclass
class RoutingTrace:
    """
    Detached per-iteration record of a routing call.

    `mean_logit_changes[t]` is the mean of |b_ij(t+1) - b_ij(t)| over all (i, j), i.e. the mean absolute agreement
    added by iteration t + 1.
    """
    mean_logit_changes: List[float] = field(default_factory=list)
    logits: List[np.ndarray] = field(default_factory=list)
    couplings: List[np.ndarray] = field(default_factory=list)

    @property
    def final_couplings(self) -> np.ndarray:
        return self.couplings[-1]


class Squash(Function):
    def forward(self, s):
        squared = (s * s).sum(axis=-1, keepdims=True)
        norm = np.sqrt(squared + SQUASH_EPSILON)
        self.s = s
        self.squared = squared
        self.norm = norm
        self.factor = squared / ((1 + squared) * norm)
        return s * self.factor

    def backward(self, grad):
        squared, norm = self.squared, self.norm
        slope = ((squared + SQUASH_EPSILON) - 0.5 * squared * (1 + squared)) / ((1 + squared) ** 2 * norm ** 3)
        projection = (self.s * grad).sum(axis=-1, keepdims=True)
        return self.factor * grad + 2 * slope * projection * self.s,


class Predict(Function):
    def forward(self, u, weights):
        # accumulate over the lower dimension in index order
        out = weights[..., 0] * u[:, None, None, 0]
        for k in range(1, u.shape[1]):
            out = out + weights[..., k] * u[:, None, None, k]
        self.u = u
        self.weights = weights
        return out

    def backward(self, grad):
        grad_u = np.einsum("ijdk,ijd->ik", self.weights, grad)
        grad_weights = grad[..., None] * self.u[:, None, None, :]
        return grad_u, grad_weights


class CouplingSoftmax(Function):
    def forward(self, logits):
        exponentials = np.exp(logits - logits.max(axis=1, keepdims=True))
        self.couplings = exponentials / exponentials.sum(axis=1, keepdims=True)
        return self.couplings

    def backward(self, grad):
        c = self.couplings
        return c * (grad - (grad * c).sum(axis=1, keepdims=True)),


class WeightedSum(Function):
    def forward(self, couplings, predictions):
        self.couplings = couplings
        self.predictions = predictions
        return (couplings[:, :, None] * predictions).sum(axis=0)

    def backward(self, grad):
        grad_couplings = (self.predictions * grad[None, :, :]).sum(axis=-1)
        grad_predictions = self.couplings[:, :, None] * grad[None, :, :]
        return grad_couplings, grad_predictions


class Agreement(Function):
    def forward(self, predictions, outputs):
        self.predictions = predictions
        self.outputs = outputs
        return (predictions * outputs[None, :, :]).sum(axis=-1)

    def backward(self, grad):
        grad_predictions = grad[:, :, None] * self.outputs[None, :, :]
        grad_outputs = (grad[:, :, None] * self.predictions).sum(axis=0)
        return grad_predictions, grad_outputs


class OrphanColumn(Function):
    def forward(self, predictions):
        num_lower, _, upper_dim = predictions.shape
        orphan = np.zeros((num_lower, 1, upper_dim), dtype=predictions.dtype)
        return np.concatenate([predictions, orphan], axis=1)

    def backward(self, grad):
        return grad[:, :-1],


class Length(Function):
    def forward(self, v):
        self.v = v
        self.lengths = np.sqrt((v * v).sum(axis=-1))
        return self.lengths

    def backward(self, grad):
        lengths = self.lengths[..., None]
        direction = np.divide(self.v, lengths, out=np.zeros_like(self.v), where=lengths > 0)
        return grad[..., None] * direction,


def squash(s: Tensor) -> Tensor:
    """
    v = (|s|^2 / (1 + |s|^2)) * s / |s| over the last axis, with |s| = sqrt(|s|^2 + 1e-8) so s = 0 maps to 0.

    Short vectors shrink to almost zero length, long ones to just below unit length; the direction is kept.
    """
    return Squash.apply(s)


def predict(u: Tensor, weights: Tensor) -> PredictionTensor:
    """
    û_j|i = W_ij u_i for every pair (i, j), without a bias.

    :param u:       Lower capsule outputs, [num_lower, lower_dim]
    :param weights: Transformation matrices, [num_lower, num_upper, upper_dim, lower_dim]
    """
    if u.data.ndim != 2:
        raise ShapeMismatch("predict", "rank", 2, u.data.ndim)
    if weights.data.ndim != 4:
        raise ShapeMismatch("predict", "weight rank", 4, weights.data.ndim)
    if weights.shape[0] != u.shape[0]:
        raise ShapeMismatch("predict", "num_lower", u.shape[0], weights.shape[0])
    if weights.shape[3] != u.shape[1]:
        raise ShapeMismatch("predict", "lower_dim", u.shape[1], weights.shape[3])
    return PredictionTensor(Predict.apply(u, weights), lower_dim=u.shape[1])


def coupling_softmax(logits: Tensor) -> Tensor:
    """c_ij = exp(b_ij) / sum_k exp(b_ik): softmax across the upper capsules of each row"""
    return CouplingSoftmax.apply(logits)


def weighted_sum(couplings: Tensor, predictions: PredictionTensor) -> Tensor:
    """s_j = sum_i c_ij û_j|i"""
    return WeightedSum.apply(couplings, predictions.values)


def agreement(predictions: PredictionTensor, v: Tensor) -> Tensor:
    """a_ij = û_j|i . v_j"""
    if v.shape != predictions.values.shape[1:]:
        raise ShapeMismatch("agreement", "upper capsules", predictions.values.shape[1:], v.shape)
    return Agreement.apply(predictions.values, v)


def orphan_extend(predictions: PredictionTensor) -> PredictionTensor:
    """
    Append a "none-of-the-above" parent whose predictions are fixed zero vectors.

    It takes part in the coupling softmax, so lower capsules that agree with no real parent can send their output
    there, but it never produces an output of its own.
    """
    return PredictionTensor(OrphanColumn.apply(predictions.values), lower_dim=predictions.lower_dim)


def vector_length(v: Tensor) -> Tensor:
    """Euclidean length over the last axis; the gradient at the zero vector is taken as zero"""
    return Length.apply(v)


def route(predictions: PredictionTensor, iterations: int = DEFAULT_ROUTING_ITERATIONS,
          priors: Optional[Tensor] = None) -> Tuple[Tensor, RoutingState, RoutingTrace]:
    """
    Dynamic routing between two capsule layers.

    The logits start from the priors (zero by default) on every call.  Each iteration computes the couplings, the
    parent outputs v_j = squash(sum_i c_ij û_j|i), and adds the agreement û_j|i . v_j to the logits; the last update
    is applied too, so the trace covers every iteration.  All iterations stay on the graph, couplings included.

    :param predictions: û, [num_lower, num_upper, upper_dim]
    :param iterations:  Number of routing iterations r, at least 1
    :param priors:      Initial logits, [num_lower, num_upper]; zeros when omitted
    :return:            The parent outputs v of the last iteration, the final state and the trace
    """
    if iterations < 1:
        raise InvalidRoutingIterations(iterations)
    shape = predictions.values.shape[:2]
    if priors is None:
        priors = Tensor(np.zeros(shape, dtype=predictions.values.dtype))
    elif priors.shape != shape:
        raise ShapeMismatch("route", "priors", shape, priors.shape)

    trace = RoutingTrace()
    logits = priors
    for _ in range(iterations):
        couplings = coupling_softmax(logits)
        outputs = squash(weighted_sum(couplings, predictions))
        agreements = agreement(predictions, outputs)
        logits = add(logits, agreements)
        trace.mean_logit_changes.append(float(np.abs(agreements.data).mean()))
        trace.couplings.append(couplings.data.copy())
        trace.logits.append(logits.data.copy())
    state = RoutingState(logits=logits, couplings=couplings, priors=priors, iterations=iterations)
    return outputs, state, trace
