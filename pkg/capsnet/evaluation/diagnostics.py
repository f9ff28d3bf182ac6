#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import csv
import logging
from dataclasses import dataclass
from os import PathLike
from typing import FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from capsnet.capsules.exceptions import InvalidRoutingIterations
from capsnet.evaluation.metrics import classify, classify_top2
from capsnet.network.forward import forward, mask_and_decode
from capsnet.network.models import CapsNetModel
from capsnet.utils.atomic_write.atomic_write import atomic_write

logger = logging.getLogger(__name__)

PathType = Union[str, PathLike]

PERTURBATION_OFFSETS = np.round(np.linspace(-0.25, 0.25, 11), 2)
SEGMENT_THRESHOLD = 1 / 255
MIN_DIAGNOSTIC_ITERATIONS = 2


@dataclass
class PerturbationGrid:
    """
    Reconstructions of one digit with a single dimension of its activity vector nudged.

    `reconstructions[d, k]` is the decode with `offsets[k]` added to dimension d; the column where the offset is 0
    equals `baseline`.
    """
    target_class: int
    base_vector: np.ndarray
    offsets: np.ndarray
    baseline: np.ndarray
    reconstructions: np.ndarray

    @property
    def zero_column(self) -> int:
        return int(np.flatnonzero(self.offsets == 0)[0])


def perturb_dimensions(model: CapsNetModel, image, target_class: Optional[int] = None,
                       offsets: Sequence[float] = PERTURBATION_OFFSETS) -> PerturbationGrid:
    """
    Add each offset to each dimension of the target capsule's activity vector and decode the result.

    The perturbed vector goes to the decoder as is, without squashing again.

    :param model:        A trained network
    :param image:        The digit
    :param target_class: Its true class; the predicted class when omitted
    :param offsets:      Values added to one dimension at a time, -0.25..0.25 in steps of 0.05 by default
    :return:             digit_dim x len(offsets) reconstructions
    """
    size = model.architecture.input_size
    result = forward(model, image)
    v = result.digit_caps.data
    if target_class is None:
        target_class = classify(result.lengths.data)
    offsets = np.asarray(offsets, dtype=np.float64)

    baseline = mask_and_decode(model, v, target_class).data.reshape(size, size)
    dimensions = v.shape[1]
    reconstructions = np.zeros((dimensions, len(offsets), size, size), dtype=baseline.dtype)
    for dimension in range(dimensions):
        for column, offset in enumerate(offsets):
            perturbed = v.copy()
            perturbed[target_class, dimension] += offset
            reconstructions[dimension, column] = mask_and_decode(model, perturbed, target_class).data.reshape(size,
                                                                                                             size)
    return PerturbationGrid(target_class, v[target_class].copy(), offsets, baseline, reconstructions)


def write_perturbation_csv(grid: PerturbationGrid, path: PathType) -> None:
    with atomic_write(path, "w") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["dimension", "offset", "component", "mean_intensity"])
        for dimension in range(grid.reconstructions.shape[0]):
            for column, offset in enumerate(grid.offsets):
                writer.writerow([dimension, f"{offset:.2f}", repr(float(grid.base_vector[dimension] + offset)),
                                 repr(float(grid.reconstructions[dimension, column].mean()))])


@dataclass
class RoutingDiagnostics:
    mean_logit_changes: List[float]
    count: int


def routing_diagnostics(model: CapsNetModel, source, r_max: int = 5, limit: Optional[int] = None) -> RoutingDiagnostics:
    """
    Mean |b_ij(t+1) - b_ij(t)| per routing iteration t, averaged over a dataset.

    Only the digit columns are measured; the orphan parent never agrees with anything, so its logits stay put.

    :param model:  The network, run with `r_max` iterations
    :param source: Examples, read without augmentation
    :param r_max:  Iterations to trace, at least 2
    :param limit:  Use only the first `limit` examples
    """
    if r_max < MIN_DIAGNOSTIC_ITERATIONS:
        raise InvalidRoutingIterations(r_max, minimum=MIN_DIAGNOSTIC_ITERATIONS)
    count = len(source) if limit is None else min(limit, len(source))
    totals = np.zeros(r_max)
    for index in range(count):
        result = forward(model, source.example(index).image, iterations=r_max)
        totals += logit_changes(result, model.architecture.num_classes)
    means = (totals / count).tolist() if count else totals.tolist()
    logger.info("Routing logit changes over %d examples: %s", count, ", ".join(f"{value:.4g}" for value in means))
    return RoutingDiagnostics(means, count)


def logit_changes(result, num_classes: int) -> np.ndarray:
    """Mean absolute logit change per iteration over the first `num_classes` parents"""
    previous = result.state.priors.data[:, :num_classes]
    changes = np.zeros(len(result.trace.logits))
    for iteration, logits in enumerate(result.trace.logits):
        current = logits[:, :num_classes]
        changes[iteration] = np.abs(current - previous).mean()
        previous = current
    return changes


def write_routing_csv(diagnostics: RoutingDiagnostics, path: PathType) -> None:
    """One row per iteration, numbered from 1"""
    with atomic_write(path, "w") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["iteration", "mean_abs_logit_change"])
        for iteration, value in enumerate(diagnostics.mean_logit_changes, start=1):
            writer.writerow([iteration, repr(float(value))])


@dataclass
class SegmentationResult:
    """
    A composite split into its two digits.  `masks[k]` marks the pixels assigned to `classes[k]`; a pixel may belong
    to both digits or to neither.
    """
    composite: np.ndarray
    classes: Tuple[int, int]
    lengths: np.ndarray
    reconstructions: np.ndarray
    masks: np.ndarray

    @property
    def predicted(self) -> FrozenSet[int]:
        return classify_top2(self.lengths)

    def assignment(self, row: int, column: int) -> FrozenSet[int]:
        return frozenset(label for label, mask in zip(self.classes, self.masks) if mask[row, column])


def segment(model: CapsNetModel, composite, classes: Optional[Sequence[int]] = None,
            threshold: float = SEGMENT_THRESHOLD) -> SegmentationResult:
    """
    Reconstruct the two most active digit capsules one at a time and give each digit the pixels its reconstruction
    lights up.

    :param model:     A network trained on composites
    :param composite: The image, pixels in [0, 1]
    :param classes:   Decode these two classes instead of the two most active ones
    :param threshold: Smallest reconstruction intensity that assigns a pixel, one byte step by default
    """
    size = model.architecture.input_size
    result = forward(model, composite)
    lengths = result.lengths.data
    if classes is None:
        classes = tuple(int(index) for index in np.argsort(-lengths, kind="stable")[:2])
    classes = tuple(int(label) for label in classes)
    reconstructions = np.stack([mask_and_decode(model, result.digit_caps, label).data.reshape(size, size)
                                for label in classes])
    masks = reconstructions >= threshold
    return SegmentationResult(np.asarray(composite, dtype=reconstructions.dtype), classes, lengths.copy(),
                              reconstructions, masks)


def write_segmentation_csv(result: SegmentationResult, path: PathType) -> None:
    with atomic_write(path, "w") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["class", "length", "assigned_pixels", "shared_pixels"])
        shared = int(np.logical_and(*result.masks).sum()) if len(result.masks) == 2 else 0
        for label, mask in zip(result.classes, result.masks):
            writer.writerow([label, repr(float(result.lengths[label])), int(mask.sum()), shared])
