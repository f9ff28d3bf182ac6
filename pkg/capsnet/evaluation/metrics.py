#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional

import numpy as np

from capsnet.evaluation.api.serializers import SUMMARY_FIELDS, EvalReportSerializer
from capsnet.network.forward import forward, mask_and_decode
from capsnet.network.losses import margin_loss, reconstruction_loss
from capsnet.network.models import CapsNetModel
from capsnet.utils.atomic_write.atomic_write import atomic_write

logger = logging.getLogger(__name__)

MODES = ("single", "multi")


def classify(lengths) -> int:
    """The longest digit capsule; the lowest index wins a tie"""
    return int(np.argmax(np.asarray(lengths)))


def classify_top2(lengths) -> FrozenSet[int]:
    """The two longest digit capsules as an unordered pair; ties go to the lower indices"""
    order = np.argsort(-np.asarray(lengths), kind="stable")
    return frozenset(int(index) for index in order[:2])


def is_correct(lengths, targets: Iterable[int]) -> bool:
    """One target: the prediction must be it.  Two targets: the top-two pair must equal them as a set."""
    targets = frozenset(int(target) for target in targets)
    if len(targets) == 1:
        return classify(lengths) in targets
    return classify_top2(lengths) == targets


@dataclass
class EvalReport:
    dataset: str
    mode: str
    count: int
    errors: int
    error_rate: float
    confusion: List[List[int]] = field(default_factory=list)
    mean_margin: float = 0.0
    mean_reconstruction: float = 0.0


@dataclass
class _Scored:
    correct: bool
    margin: float
    reconstruction: float
    pairs: List[tuple]


def _match(targets, predicted) -> List[tuple]:
    """(true, predicted) pairs: shared classes on the diagonal, the rest paired in sorted order"""
    targets, predicted = set(targets), set(predicted)
    pairs = [(label, label) for label in sorted(targets & predicted)]
    pairs += list(zip(sorted(targets - predicted), sorted(predicted - targets)))
    return pairs


def _score(model: CapsNetModel, example, mode: str) -> _Scored:
    architecture = model.architecture
    result = forward(model, example.image)
    lengths = result.lengths.data
    margin = margin_loss(result.lengths, example.targets, architecture.m_plus, architecture.m_minus,
                         architecture.down_weight).item()
    if mode == "single":
        predicted = [classify(lengths)]
        decoded = mask_and_decode(model, result.digit_caps, predicted[0])
        reconstruction = reconstruction_loss(decoded, example.image).item()
    else:
        predicted = sorted(classify_top2(lengths))
        reconstruction = sum(reconstruction_loss(mask_and_decode(model, result.digit_caps, label), target).item()
                             for label, target in example.reconstruction_targets)
    return _Scored(correct=is_correct(lengths, example.targets), margin=margin, reconstruction=reconstruction,
                   pairs=_match(example.targets, predicted))


def evaluate(model: CapsNetModel, source, mode: Optional[str] = None, limit: Optional[int] = None,
             workers: int = 1) -> EvalReport:
    """
    Classification error of a model on a source, without augmentation.

    In single mode the reconstruction is decoded from the predicted class.  In multi mode an example counts as
    correct when the two longest capsules equal its label pair, and each label decodes its own source digit.

    :param model:   The network
    :param source:  Examples, see capsnet.datasets.sources
    :param mode:    "single" or "multi", the source's own mode when omitted
    :param limit:   Evaluate only the first `limit` examples
    :param workers: Threads scoring examples; the reduction runs in example order
    """
    mode = mode or source.mode
    if mode not in MODES:
        raise ValueError(f"Unknown mode '{mode}', expected one of {MODES}")
    count = len(source) if limit is None else min(limit, len(source))
    num_classes = model.architecture.num_classes

    def score(index):
        return _score(model, source.example(index), mode)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(score, range(count)))
    else:
        scored = [score(index) for index in range(count)]

    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    for item in scored:
        for true, predicted in item.pairs:
            confusion[true, predicted] += 1
    errors = sum(1 for item in scored if not item.correct)
    report = EvalReport(
        dataset=source.name,
        mode=mode,
        count=count,
        errors=errors,
        error_rate=errors / count if count else 0.0,
        confusion=confusion.tolist(),
        mean_margin=float(np.mean([item.margin for item in scored])) if count else 0.0,
        mean_reconstruction=float(np.mean([item.reconstruction for item in scored])) if count else 0.0,
    )
    logger.info("%s (%s): %d/%d wrong, error rate %.4f", report.dataset, mode, errors, count, report.error_rate)
    return report


def write_report_csv(report: EvalReport, path) -> None:
    """
    The summary as a header row and a value row, a blank line, then the confusion matrix with true classes as rows
    """
    serializer = EvalReportSerializer(report)
    with atomic_write(path, "w") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        writer.writerow(serializer.summary_row())
        writer.writerow([])
        writer.writerow(["true"] + [f"predicted_{label}" for label in range(len(report.confusion))])
        for label, row in enumerate(serializer.data["confusion"]):
            writer.writerow([label] + list(row))
