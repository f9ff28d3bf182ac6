#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import logging
from typing import Callable, Sequence

import numpy as np

from capsnet.autodiff.tensor import Graph, Tensor

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-3
DEFAULT_SAMPLES = 12


def finite_difference_check(build: Callable[..., Tensor], params: Sequence[Tensor], epsilon: float = DEFAULT_EPSILON,
                            samples: int = DEFAULT_SAMPLES, seed: int = 0) -> float:
    """
    Compare reverse-mode gradients with central finite differences.

    `build` receives one tensor per entry of `params` and must return a scalar tensor.  It is called once on a graph
    to obtain analytic gradients, then repeatedly on constants with one coordinate nudged by +/- epsilon.  Pass 64-bit
    shadows (`Tensor.shadow()`) as params; 32-bit differences are too noisy at the usual epsilon.

    :param build:   Deterministic function of the params returning a scalar tensor
    :param params:  The tensors to differentiate with respect to; their data is perturbed in place and restored
    :param epsilon: Half-width of the central difference
    :param samples: Coordinates sampled per param (all of them when the param is smaller)
    :param seed:    Seed for the coordinate sampling
    :return:        max over sampled coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
    """
    graph = Graph()
    variables = [graph.variable(param) for param in params]
    graph.backward(build(*variables))
    analytic_gradients = [variable.grad.copy() for variable in variables]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for position, param in enumerate(params):
        count = min(samples, param.size)
        for flat_index in rng.choice(param.size, size=count, replace=False):
            index = np.unravel_index(flat_index, param.shape)
            original = param.data[index]
            param.data[index] = original + epsilon
            plus = build(*params).item()
            param.data[index] = original - epsilon
            minus = build(*params).item()
            param.data[index] = original
            numeric = (plus - minus) / (2 * epsilon)
            analytic = float(analytic_gradients[position][index])
            error = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
            worst = max(worst, error)
    logger.debug("finite difference check over %d params: max relative error %.3g", len(params), worst)
    return worst
