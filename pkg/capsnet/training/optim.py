#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from capsnet.autodiff.tensor import Tensor
from capsnet.training.config import TrainConfig
from capsnet.training.exceptions import NonFiniteGradient


def lr_schedule(step: int, config: TrainConfig) -> float:
    """base * decay_rate ** (step / decay_steps), with a continuous exponent"""
    if step < 0:
        raise ValueError("step must not be negative")
    return config.learning_rate * config.decay_rate ** (step / config.decay_steps)


@dataclass
class OptimizerState:
    first_moments: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moments: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def zeros(cls, parameters: Mapping[str, Tensor]) -> "OptimizerState":
        return cls({name: np.zeros_like(p.data) for name, p in parameters.items()},
                   {name: np.zeros_like(p.data) for name, p in parameters.items()})


def adam_step(parameters: Mapping[str, Tensor], gradients: Mapping[str, np.ndarray], state: OptimizerState,
              learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> OptimizerState:
    """
    One Adam update with bias correction:

        m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2,  p -= lr * m / (1 - b1^t) / (sqrt(v / (1 - b2^t)) + eps)

    Every gradient is checked before anything changes, so a failed step leaves parameters and state as they were.
    Parameters get new data arrays; graphs built before the step keep seeing the old values.

    :raises NonFiniteGradient: A gradient holds NaN or Inf
    """
    for name in parameters:
        if not np.all(np.isfinite(gradients[name])):
            raise NonFiniteGradient(name)
    state.step += 1
    first_correction = 1 - beta1 ** state.step
    second_correction = 1 - beta2 ** state.step
    for name, parameter in parameters.items():
        gradient = gradients[name]
        first = state.first_moments.get(name)
        second = state.second_moments.get(name)
        if first is None:
            first, second = np.zeros_like(parameter.data), np.zeros_like(parameter.data)
        first = beta1 * first + (1 - beta1) * gradient
        second = beta2 * second + (1 - beta2) * gradient * gradient
        update = learning_rate * (first / first_correction) / (np.sqrt(second / second_correction) + epsilon)
        state.first_moments[name] = first.astype(parameter.dtype)
        state.second_moments[name] = second.astype(parameter.dtype)
        parameter.data = (parameter.data - update).astype(parameter.dtype)
    return state


def clip_by_global_norm(gradients: Dict[str, np.ndarray], clip_norm: float) -> float:
    """Scale all gradients in place so their joint L2 norm is at most clip_norm; returns the norm before clipping"""
    norm = float(np.sqrt(sum(float((gradient.astype(np.float64) ** 2).sum()) for gradient in gradients.values())))
    if norm > clip_norm:
        for name in gradients:
            gradients[name] = gradients[name] * (clip_norm / norm)
    return norm
