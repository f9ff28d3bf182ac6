#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

"""
Binary checkpoints.  Little-endian throughout:

    b"CPS1" | u32 version = 1 | u64 tensor count | tensors
    u64 optimizer tensor count (0 when absent) | tensors named adam.m.<parameter> and adam.v.<parameter>
    u64 step | 16 bytes PCG64 state | 16 bytes PCG64 increment

    tensor: u16 name length | name (utf-8) | u8 rank | u32 dims[rank] | f32 data, row-major

Hyperparameters are stored as tensors named arch.<field>, ahead of the parameters.
"""

import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass, fields
from os import PathLike
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple, Union

import numpy as np

from capsnet.autodiff.tensor import Tensor
from capsnet.network.models import Architecture, CapsNetModel
from capsnet.training.exceptions import CheckpointFormatError, MissingOptimizerState, UnknownTensorName
from capsnet.training.optim import OptimizerState
from capsnet.utils.atomic_write.atomic_write import atomic_write

logger = logging.getLogger(__name__)

MAGIC = b"CPS1"
VERSION = 1
ARCH_PREFIX = "arch."
FIRST_MOMENT_PREFIX = "adam.m."
SECOND_MOMENT_PREFIX = "adam.v."
RNG_STATE_BYTES = 16

PathType = Union[str, PathLike]


@dataclass
class Checkpoint:
    version: int
    architecture: Architecture
    parameters: "OrderedDict[str, np.ndarray]"
    optimizer: Optional[OptimizerState]
    step: int
    rng_state: Tuple[int, int]
    path: Optional[Path] = None

    def model(self) -> CapsNetModel:
        return CapsNetModel(self.architecture,
                            OrderedDict((name, Tensor(data.copy())) for name, data in self.parameters.items()))

    def generator(self) -> np.random.Generator:
        """The saved random generator, ready to continue where training stopped"""
        bit_generator = np.random.PCG64()
        state, increment = self.rng_state
        bit_generator.state = {"bit_generator": "PCG64", "state": {"state": state, "inc": increment},
                               "has_uint32": 0, "uinteger": 0}
        return np.random.Generator(bit_generator)

    def optimizer_state(self) -> OptimizerState:
        """
        :raises MissingOptimizerState: The checkpoint was saved for evaluation only
        """
        if self.optimizer is None:
            raise MissingOptimizerState(self.path)
        return self.optimizer


def _architecture_tensors(architecture: Architecture) -> Iterator[Tuple[str, np.ndarray]]:
    for name, value in architecture.as_dict().items():
        yield ARCH_PREFIX + name, np.asarray(value, dtype=np.float32)


def _write_tensor(stream, name: str, data: np.ndarray) -> None:
    encoded = name.encode("utf-8")
    stream.write(struct.pack("<H", len(encoded)))
    stream.write(encoded)
    stream.write(struct.pack("<B", data.ndim))
    stream.write(struct.pack(f"<{data.ndim}I", *data.shape))
    stream.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def _rng_state(rng: Optional[np.random.Generator]) -> Tuple[int, int]:
    if rng is None:
        return 0, 0
    state = rng.bit_generator.state
    if state["bit_generator"] != "PCG64":
        raise ValueError("Checkpoints store PCG64 generators only")
    return state["state"]["state"], state["state"]["inc"]


def save_checkpoint(path: PathType, model: CapsNetModel, optimizer: Optional[OptimizerState] = None, step: int = 0,
                    rng: Optional[np.random.Generator] = None) -> None:
    """
    Write a checkpoint atomically.

    :param path:      Destination file
    :param model:     The model whose architecture and parameters to store
    :param optimizer: Adam moments; omit for an evaluation-only checkpoint
    :param step:      Optimizer steps taken so far
    :param rng:       The generator training continues with
    """
    tensors = list(_architecture_tensors(model.architecture))
    tensors += [(name, parameter.data) for name, parameter in model.parameters.items()]
    moments = []
    if optimizer is not None:
        moments += [(FIRST_MOMENT_PREFIX + name, data) for name, data in optimizer.first_moments.items()]
        moments += [(SECOND_MOMENT_PREFIX + name, data) for name, data in optimizer.second_moments.items()]
    state, increment = _rng_state(rng)

    with atomic_write(path) as stream:
        stream.write(MAGIC)
        stream.write(struct.pack("<IQ", VERSION, len(tensors)))
        for name, data in tensors:
            _write_tensor(stream, name, data)
        stream.write(struct.pack("<Q", len(moments)))
        for name, data in moments:
            _write_tensor(stream, name, data)
        stream.write(struct.pack("<Q", step))
        stream.write(state.to_bytes(RNG_STATE_BYTES, "little"))
        stream.write(increment.to_bytes(RNG_STATE_BYTES, "little"))
    logger.info("Saved checkpoint %s at step %d", path, step)


class _Reader:
    def __init__(self, path: Path, content: bytes):
        self.path = path
        self.content = content
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.content):
            raise CheckpointFormatError(self.path, f"truncated at byte {len(self.content)}")
        chunk = self.content[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, layout: str):
        layout = struct.Struct(layout)
        return layout.unpack(self.take(layout.size))

    def tensor(self) -> Tuple[str, np.ndarray]:
        length, = self.unpack("<H")
        try:
            name = self.take(length).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointFormatError(self.path, f"tensor name at byte {self.offset - length} is not utf-8")
        rank, = self.unpack("<B")
        shape = self.unpack(f"<{rank}I")
        count = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(self.take(4 * count), dtype="<f4").astype(np.float32).reshape(shape)
        return name, data


def _architecture(path: Path, values: Dict[str, np.ndarray]) -> Architecture:
    known = {field.name for field in fields(Architecture)}
    cleaned = {}
    for name, data in values.items():
        if name not in known:
            raise UnknownTensorName(path, ARCH_PREFIX + name)
        # shortest decimal that survives float32, so 0.9 comes back as 0.9
        cleaned[name] = [float(str(value)) for value in data.reshape(-1)] if data.ndim else float(str(data[()]))
    return Architecture.from_dict(cleaned)


def load_checkpoint(path: PathType) -> Checkpoint:
    """
    Read a checkpoint written by `save_checkpoint`.

    :raises CheckpointFormatError: Bad magic, unsupported version, truncation, trailing bytes, missing or misshapen
                                   parameters
    :raises UnknownTensorName:     A tensor the model has no place for
    """
    path = Path(path)
    reader = _Reader(path, path.read_bytes())
    magic = reader.take(len(MAGIC))
    if magic != MAGIC:
        raise CheckpointFormatError(path, f"wrong magic {magic!r}, expected {MAGIC!r}")
    version, count = reader.unpack("<IQ")
    if version != VERSION:
        raise CheckpointFormatError(path, f"unsupported version {version}")

    hyperparameters, stored = {}, OrderedDict()
    for _ in range(count):
        name, data = reader.tensor()
        if name.startswith(ARCH_PREFIX):
            hyperparameters[name[len(ARCH_PREFIX):]] = data
        else:
            stored[name] = data
    architecture = _architecture(path, hyperparameters)
    shapes = architecture.parameter_shapes()
    for name, data in stored.items():
        if name not in shapes:
            raise UnknownTensorName(path, name)
        if data.shape != shapes[name]:
            raise CheckpointFormatError(path, f"'{name}' has shape {data.shape}, expected {shapes[name]}")
    missing = [name for name in shapes if name not in stored]
    if missing:
        raise CheckpointFormatError(path, f"missing parameters {', '.join(missing)}")
    parameters = OrderedDict((name, stored[name]) for name in shapes)

    moment_count, = reader.unpack("<Q")
    first_moments, second_moments = {}, {}
    for _ in range(moment_count):
        name, data = reader.tensor()
        if name.startswith(FIRST_MOMENT_PREFIX) and name[len(FIRST_MOMENT_PREFIX):] in shapes:
            first_moments[name[len(FIRST_MOMENT_PREFIX):]] = data
        elif name.startswith(SECOND_MOMENT_PREFIX) and name[len(SECOND_MOMENT_PREFIX):] in shapes:
            second_moments[name[len(SECOND_MOMENT_PREFIX):]] = data
        else:
            raise UnknownTensorName(path, name)

    step, = reader.unpack("<Q")
    state = int.from_bytes(reader.take(RNG_STATE_BYTES), "little")
    increment = int.from_bytes(reader.take(RNG_STATE_BYTES), "little")
    if reader.offset != len(reader.content):
        raise CheckpointFormatError(path, f"{len(reader.content) - reader.offset} unexpected trailing bytes")

    optimizer = None
    if moment_count:
        if set(first_moments) != set(shapes) or set(second_moments) != set(shapes):
            raise CheckpointFormatError(path, "incomplete optimizer state")
        optimizer = OptimizerState(first_moments, second_moments, step)
    logger.info("Loaded checkpoint %s at step %d", path, step)
    return Checkpoint(version, architecture, parameters, optimizer, step, (state, increment), path)
