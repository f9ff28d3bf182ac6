#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from capsnet.autodiff.exceptions import GraphMismatch, NonScalarLoss

DEFAULT_DTYPE = np.float32
SHADOW_DTYPE = np.float64

BackwardRule = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """
    A dense n-dimensional array of reals with an optional gradient slot.

    Tensors created directly are constants.  A tensor becomes part of a computation graph either by being watched
    (`Graph.variable`) or by being produced by an operation on watched tensors, in which case `node` holds its
    identity in that graph.

    Training uses 32-bit reals.  64-bit tensors are only used as shadows for gradient verification; operations keep
    whatever precision their operands carry.
    """

    __slots__ = ("data", "grad", "node", "graph")

    def __init__(self, data, dtype=None, node: Optional[int] = None, graph: Optional["Graph"] = None):
        if dtype is None:
            is_real_array = isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64)
            dtype = data.dtype if is_real_array else DEFAULT_DTYPE
        self.data: np.ndarray = np.asarray(data, dtype=dtype)
        self.grad: Optional[np.ndarray] = None
        self.node = node
        self.graph = graph

    @classmethod
    def zeros(cls, shape, dtype=DEFAULT_DTYPE) -> "Tensor":
        return cls(np.zeros(shape, dtype=dtype))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def shadow(self) -> "Tensor":
        """A 64-bit constant copy, used by gradient verification"""
        return Tensor(self.data.astype(SHADOW_DTYPE))

    def __repr__(self) -> str:
        tracked = f", node={self.node}" if self.node is not None else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tracked})"


class Operation(NamedTuple):
    inputs: Tuple[Optional[int], ...]
    output: int
    backward: BackwardRule


class Graph:
    """
    A define-by-run tape of operations.

    A graph is built afresh for every forward pass and owned by a single caller.  Operations are appended as they
    execute, so the tape is always in topological order.
    """

    def __init__(self):
        self.operations: List[Operation] = []
        self._leaves: Dict[int, Tensor] = {}
        self._watched: Dict[int, Tensor] = {}
        self._nodes = 0

    def variable(self, tensor: Tensor) -> Tensor:
        """
        Watch a parameter.  Watching the same tensor twice returns the same variable.

        :param tensor: The parameter to differentiate with respect to
        :return:       A tensor sharing the parameter's data, recorded as a leaf of this graph
        """
        watched = self._watched.get(id(tensor))
        if watched is None:
            watched = Tensor(tensor.data, node=self._next_node(), graph=self)
            self._watched[id(tensor)] = watched
            self._leaves[watched.node] = watched
        return watched

    def record(self, data: np.ndarray, inputs: Sequence[Tensor], backward: BackwardRule) -> Tensor:
        """
        Append an operation to the tape.

        :param data:     The already computed output of the operation
        :param inputs:   The operands, in the order the backward rule returns their gradients
        :param backward: Maps the output gradient to one gradient (or None) per operand
        :return:         The output tensor, recorded on this graph
        """
        for operand in inputs:
            if operand.graph is not None and operand.graph is not self:
                raise GraphMismatch()
        output = Tensor(data, node=self._next_node(), graph=self)
        self.operations.append(Operation(tuple(operand.node for operand in inputs), output.node, backward))
        return output

    def gradient(self, tensor: Tensor) -> Optional[np.ndarray]:
        """The gradient of the last backward() with respect to a watched parameter"""
        watched = self._watched.get(id(tensor))
        return None if watched is None else watched.grad

    def backward(self, loss: Tensor) -> Dict[int, np.ndarray]:
        """
        Propagate the gradient of a scalar loss back to every leaf.

        Gradients reaching a node along several paths are summed.  Every leaf receives a gradient, zero when the
        loss does not depend on it.

        :param loss: A scalar tensor recorded on this graph
        :return:     The leaf gradients keyed by node id
        """
        if loss.size != 1:
            raise NonScalarLoss(loss.shape)
        if loss.graph is not self:
            raise GraphMismatch()
        gradients: Dict[int, np.ndarray] = {loss.node: np.ones_like(loss.data)}
        for operation in reversed(self.operations):
            output_gradient = gradients.pop(operation.output, None)
            if output_gradient is None:
                continue
            for node, input_gradient in zip(operation.inputs, operation.backward(output_gradient)):
                if node is None or input_gradient is None:
                    continue
                if node in gradients:
                    gradients[node] = gradients[node] + input_gradient
                else:
                    gradients[node] = input_gradient
        for node, leaf in self._leaves.items():
            leaf.grad = gradients.get(node, np.zeros_like(leaf.data))
        return {node: leaf.grad for node, leaf in self._leaves.items()}

    def _next_node(self) -> int:
        self._nodes += 1
        return self._nodes


class Function:
    """
    Base class of differentiable operations.

    Subclasses compute their output in `forward` from plain arrays, keeping whatever they need, and return one
    gradient per operand from `backward`.  `apply` records the operation when any operand is on a graph; with only
    constant operands the result is a constant and nothing is recorded.
    """

    def forward(self, *arrays: np.ndarray, **kwargs) -> np.ndarray:
        raise NotImplementedError("Forward pass not implemented for this function")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError("Backward pass not implemented for this function")

    @classmethod
    def apply(cls, *tensors: Tensor, **kwargs) -> Tensor:
        function = cls()
        data = function.forward(*(tensor.data for tensor in tensors), **kwargs)
        graph = graph_of(tensors)
        if graph is None:
            return Tensor(data, dtype=data.dtype)
        return graph.record(data, tensors, function.backward)


def graph_of(tensors: Sequence[Tensor]) -> Optional[Graph]:
    graph = None
    for tensor in tensors:
        if tensor.graph is None:
            continue
        if graph is not None and tensor.graph is not graph:
            raise GraphMismatch()
        graph = tensor.graph
    return graph


def as_tensor(value, dtype=None) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value, dtype=dtype)


def backward(graph: Graph, loss: Tensor) -> Dict[int, np.ndarray]:
    return graph.backward(loss)
