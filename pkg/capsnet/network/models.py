#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass, fields, replace
from typing import Dict, Optional, Tuple

import numpy as np

from capsnet.autodiff.tensor import DEFAULT_DTYPE, Graph, Tensor

logger = logging.getLogger(__name__)

DIGIT_WEIGHT_STD = 0.1


@dataclass(frozen=True)
class Architecture:
    """
    Hyperparameters of a CapsNet.

    The defaults are the MNIST network: Conv1 with 256 9x9 kernels, 32 types of 8D primary capsules on a 6x6 grid,
    ten 16D digit capsules and a 512-1024-784 decoder.  Grid sizes and the decoder output follow from `input_size`.
    """
    input_size: int = 28
    conv1_channels: int = 256
    kernel_size: int = 9
    primary_types: int = 32
    primary_dim: int = 8
    primary_stride: int = 2
    num_classes: int = 10
    digit_dim: int = 16
    decoder_hidden: Tuple[int, int] = (512, 1024)
    routing_iterations: int = 3
    orphan: bool = False
    learnable_priors: bool = False
    m_plus: float = 0.9
    m_minus: float = 0.1
    down_weight: float = 0.5
    reconstruction_scale: float = 0.0005

    @classmethod
    def tiny(cls, **overrides) -> "Architecture":
        """A shrunken network for gradient checks: 8 Conv1 kernels, 2 primary types on a 4x4 grid, 10 x 4D digits"""
        values = dict(input_size=24, conv1_channels=8, primary_types=2, primary_dim=4, digit_dim=4,
                      decoder_hidden=(16, 32))
        values.update(overrides)
        return cls(**values)

    @property
    def conv1_size(self) -> int:
        return self.input_size - self.kernel_size + 1

    @property
    def primary_grid(self) -> int:
        return (self.conv1_size - self.kernel_size) // self.primary_stride + 1

    @property
    def num_primary(self) -> int:
        return self.primary_types * self.primary_grid ** 2

    @property
    def num_routed(self) -> int:
        """Number of routing parents, the orphan included"""
        return self.num_classes + (1 if self.orphan else 0)

    @property
    def num_pixels(self) -> int:
        return self.input_size ** 2

    def parameter_shapes(self) -> "OrderedDict[str, Tuple[int, ...]]":
        k = self.kernel_size
        first_hidden, second_hidden = self.decoder_hidden
        shapes = OrderedDict([
            ("conv1.weight", (self.conv1_channels, 1, k, k)),
            ("conv1.bias", (self.conv1_channels,)),
            ("primary.weight", (self.primary_types * self.primary_dim, self.conv1_channels, k, k)),
            ("primary.bias", (self.primary_types * self.primary_dim,)),
            ("digit.weight", (self.num_primary, self.num_classes, self.digit_dim, self.primary_dim)),
            ("decoder.0.weight", (first_hidden, self.num_classes * self.digit_dim)),
            ("decoder.0.bias", (first_hidden,)),
            ("decoder.1.weight", (second_hidden, first_hidden)),
            ("decoder.1.bias", (second_hidden,)),
            ("decoder.2.weight", (self.num_pixels, second_hidden)),
            ("decoder.2.bias", (self.num_pixels,)),
        ])
        if self.learnable_priors:
            shapes["routing.priors"] = (self.num_primary, self.num_routed)
        return shapes

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "Architecture":
        known = {field.name for field in fields(cls)}
        cleaned = {}
        for name, value in values.items():
            if name not in known:
                continue
            default = getattr(cls, name)
            if isinstance(default, bool):
                cleaned[name] = bool(value)
            elif isinstance(default, int):
                cleaned[name] = int(value)
            elif isinstance(default, tuple):
                cleaned[name] = tuple(int(item) for item in value)
            else:
                cleaned[name] = float(value)
        return cls(**cleaned)


class CapsNetModel:
    """
    All learnable parameters of a CapsNet plus its architecture.

    A model is read-only while forward passes run, so several workers may share it; parameters only change between
    batches, when the optimizer replaces their data.
    """

    def __init__(self, architecture: Architecture, parameters: Dict[str, Tensor]):
        expected = architecture.parameter_shapes()
        for name, shape in expected.items():
            if name not in parameters:
                raise KeyError(f"Missing parameter '{name}'")
            if parameters[name].shape != shape:
                raise ValueError(f"Parameter '{name}' has shape {parameters[name].shape}, expected {shape}")
        self.architecture = architecture
        self.parameters: "OrderedDict[str, Tensor]" = OrderedDict((name, parameters[name]) for name in expected)

    @classmethod
    def initialize(cls, architecture: Optional[Architecture] = None, seed: int = 0) -> "CapsNetModel":
        """
        Create a model with fresh weights.

        Convolution and decoder weights are drawn from N(0, 2 / fan_in), the digit-capsule matrices from
        N(0, 0.1^2); biases and routing priors start at zero.

        :param architecture: The network to build, MNIST defaults when omitted
        :param seed:         Seed of the weight generator
        """
        architecture = architecture or Architecture()
        rng = np.random.default_rng(seed)
        parameters = OrderedDict()
        for name, shape in architecture.parameter_shapes().items():
            if name == "digit.weight":
                data = rng.normal(0.0, DIGIT_WEIGHT_STD, size=shape)
            elif name.endswith(".weight"):
                fan_in = int(np.prod(shape[1:]))
                data = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
            else:
                data = np.zeros(shape)
            parameters[name] = Tensor(data.astype(DEFAULT_DTYPE))
        logger.debug("Initialised a %s-parameter model", f"{sum(p.size for p in parameters.values()):,}")
        return cls(architecture, parameters)

    @property
    def dtype(self):
        return self.parameters["conv1.weight"].dtype

    def bind(self, graph: Optional[Graph]) -> Dict[str, Tensor]:
        """
        The parameters as seen by one forward pass: watched variables on `graph`, or the constants themselves when
        no graph is given (inference).
        """
        if graph is None:
            return self.parameters
        return OrderedDict((name, graph.variable(parameter)) for name, parameter in self.parameters.items())

    def shadow(self) -> "CapsNetModel":
        """A 64-bit copy for gradient verification"""
        return CapsNetModel(self.architecture,
                            OrderedDict((name, p.shadow()) for name, p in self.parameters.items()))

    def with_architecture(self, **changes) -> "CapsNetModel":
        """The same parameters under an architecture differing only in shape-preserving hyperparameters"""
        return CapsNetModel(replace(self.architecture, **changes), self.parameters)


def parameter_count(model: CapsNetModel) -> Tuple[int, int]:
    """
    :return: The number of parameters without the decoder, and with it
    """
    with_decoder = sum(parameter.size for parameter in model.parameters.values())
    decoder = sum(parameter.size for name, parameter in model.parameters.items() if name.startswith("decoder."))
    return with_decoder - decoder, with_decoder
