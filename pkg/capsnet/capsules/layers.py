#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from capsnet.autodiff.exceptions import ShapeMismatch
from capsnet.autodiff.ops import conv2d, reshape, transpose
from capsnet.autodiff.tensor import Tensor
from capsnet.capsules.routing import squash

PRIMARY_TYPES = 32
PRIMARY_DIM = 8
PRIMARY_STRIDE = 2


def primary_capsules(features: Tensor, kernels: Tensor, biases: Tensor, types: int = PRIMARY_TYPES,
                     dim: int = PRIMARY_DIM, stride: int = PRIMARY_STRIDE) -> Tensor:
    """
    Convolutional capsules: one convolution with types * dim output channels, regrouped into capsules and squashed.

    Output channel t * dim + d is component d of capsule type t.  Capsules are ordered by type, then grid row, then
    grid column, so a [256, 20, 20] input with 9x9 kernels at stride 2 gives 32 * 6 * 6 = 1152 capsules of 8D.

    :return: [types * grid_height * grid_width, dim]
    """
    if kernels.shape[0] != types * dim:
        raise ShapeMismatch("primary_capsules", "out_channels", types * dim, kernels.shape[0])
    convolved = conv2d(features, kernels, biases, stride)
    _, grid_height, grid_width = convolved.shape
    grouped = transpose(reshape(convolved, (types, dim, grid_height, grid_width)), (0, 2, 3, 1))
    return squash(reshape(grouped, (types * grid_height * grid_width, dim)))
