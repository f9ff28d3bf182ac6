#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

"""
Forward operations with their backward rules.

There is no general broadcasting: elementwise operations require equal shapes and only convolution and dense
layers add a bias.  Use `reshape`, `transpose` and `take` to line operands up explicitly.
"""

import math
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from capsnet.autodiff.exceptions import ShapeMismatch
from capsnet.autodiff.tensor import Function, Tensor

ACTIVATIONS = ("relu", "sigmoid")


class Conv2d(Function):
    def forward(self, x, kernels, bias, stride=1):
        kernel_height, kernel_width = kernels.shape[2:]
        # [C, H', W', kh, kw]
        windows = sliding_window_view(x, (kernel_height, kernel_width), axis=(1, 2))[:, ::stride, ::stride]
        self.windows = windows
        self.kernels = kernels
        self.stride = stride
        self.input_shape = x.shape
        out = np.tensordot(kernels, windows, axes=([1, 2, 3], [0, 3, 4]))
        return out + bias[:, None, None]

    def backward(self, grad):
        stride = self.stride
        kernel_height, kernel_width = self.kernels.shape[2:]
        out_height, out_width = grad.shape[1:]
        grad_kernels = np.tensordot(grad, self.windows, axes=([1, 2], [1, 2]))
        grad_bias = grad.sum(axis=(1, 2))
        # [C, kh, kw, H', W']
        columns = np.tensordot(self.kernels, grad, axes=([0], [0]))
        grad_input = np.zeros(self.input_shape, dtype=grad.dtype)
        for row in range(kernel_height):
            for col in range(kernel_width):
                grad_input[:, row:row + stride * out_height:stride, col:col + stride * out_width:stride] += \
                    columns[:, row, col]
        return grad_input, grad_kernels, grad_bias


class Dense(Function):
    def forward(self, x, weight, bias):
        self.x = x
        self.weight = weight
        return np.matmul(weight, x) + bias

    def backward(self, grad):
        return np.matmul(self.weight.T, grad), np.outer(grad, self.x), grad


class Relu(Function):
    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, np.zeros_like(x))

    def backward(self, grad):
        return np.where(self.mask, grad, np.zeros_like(grad)),


class Sigmoid(Function):
    def forward(self, x):
        self.out = expit(x)
        return self.out

    def backward(self, grad):
        return grad * self.out * (1 - self.out),


class Reshape(Function):
    def forward(self, x, shape=()):
        self.input_shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return grad.reshape(self.input_shape),


class Transpose(Function):
    def forward(self, x, axes=()):
        self.axes = axes
        return np.ascontiguousarray(x.transpose(axes))

    def backward(self, grad):
        return grad.transpose(np.argsort(self.axes)),


class Take(Function):
    def forward(self, x, indices=(), axis=0):
        self.input_shape = x.shape
        self.indices = np.asarray(indices)
        self.axis = axis
        return np.take(x, self.indices, axis=axis)

    def backward(self, grad):
        grad_input = np.zeros(self.input_shape, dtype=grad.dtype)
        moved = np.moveaxis(grad_input, self.axis, 0)
        np.add.at(moved, self.indices, np.moveaxis(grad, self.axis, 0))
        return grad_input,


class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        return grad, grad


class Subtract(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


class Multiply(Function):
    def forward(self, a, b):
        self.a = a
        self.b = b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Scale(Function):
    def forward(self, x, factor=1.0):
        self.factor = factor
        return np.multiply(x, factor, dtype=x.dtype)

    def backward(self, grad):
        return np.multiply(grad, self.factor, dtype=grad.dtype),


class Total(Function):
    def forward(self, x):
        self.input_shape = x.shape
        return np.asarray(x.sum(), dtype=x.dtype)

    def backward(self, grad):
        return np.full(self.input_shape, grad, dtype=grad.dtype),


def conv2d(input: Tensor, kernels: Tensor, bias: Tensor, stride: int = 1) -> Tensor:
    """
    Valid (unpadded) cross-correlation of a [C, H, W] input with [K, C, kh, kw] kernels.

    The output is [K, H', W'] with H' = (H - kh) // stride + 1, and likewise for W'.
    """
    if input.data.ndim != 3:
        raise ShapeMismatch("conv2d", "rank", 3, input.data.ndim)
    if kernels.data.ndim != 4:
        raise ShapeMismatch("conv2d", "kernel rank", 4, kernels.data.ndim)
    channels, height, width = input.shape
    out_channels, kernel_channels, kernel_height, kernel_width = kernels.shape
    if kernel_channels != channels:
        raise ShapeMismatch("conv2d", "channels", channels, kernel_channels)
    if height < kernel_height:
        raise ShapeMismatch("conv2d", "height", f">= {kernel_height}", height)
    if width < kernel_width:
        raise ShapeMismatch("conv2d", "width", f">= {kernel_width}", width)
    if bias.shape != (out_channels,):
        raise ShapeMismatch("conv2d", "out_channels", (out_channels,), bias.shape)
    if stride < 1:
        raise ShapeMismatch("conv2d", "stride", ">= 1", stride)
    return Conv2d.apply(input, kernels, bias, stride=stride)


def dense(input: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """weight @ input + bias for an [n] input and an [m, n] weight"""
    if input.data.ndim != 1:
        raise ShapeMismatch("dense", "rank", 1, input.data.ndim)
    if weight.data.ndim != 2 or weight.shape[1] != input.shape[0]:
        raise ShapeMismatch("dense", "in_features", input.shape[0], weight.shape[1:])
    if bias.shape != weight.shape[:1]:
        raise ShapeMismatch("dense", "out_features", weight.shape[:1], bias.shape)
    return Dense.apply(input, weight, bias)


def activation(input: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return Relu.apply(input)
    if kind == "sigmoid":
        return Sigmoid.apply(input)
    raise ValueError(f"Unknown activation '{kind}', expected one of {ACTIVATIONS}")


def reshape(input: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if math.prod(shape) != input.size:
        raise ShapeMismatch("reshape", "size", input.size, math.prod(shape))
    return Reshape.apply(input, shape=shape)


def transpose(input: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(input.data.ndim)):
        raise ShapeMismatch("transpose", "axes", tuple(range(input.data.ndim)), axes)
    return Transpose.apply(input, axes=axes)


def take(input: Tensor, indices: Sequence[int], axis: int = 0) -> Tensor:
    return Take.apply(input, indices=tuple(indices), axis=axis)


def _same_shape(operation: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(operation, "shape", a.shape, b.shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return Add.apply(a, b)


def subtract(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("subtract", a, b)
    return Subtract.apply(a, b)


def multiply(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("multiply", a, b)
    return Multiply.apply(a, b)


def scale(input: Tensor, factor: float) -> Tensor:
    return Scale.apply(input, factor=factor)


def total(input: Tensor) -> Tensor:
    """Sum of every element, as a scalar tensor"""
    return Total.apply(input)
