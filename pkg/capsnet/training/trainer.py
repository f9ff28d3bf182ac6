#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from os import PathLike
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from capsnet.autodiff.tensor import Graph
from capsnet.datasets.sources import TrainingExample
from capsnet.evaluation.metrics import evaluate, is_correct
from capsnet.network.losses import total_loss
from capsnet.network.models import CapsNetModel
from capsnet.training.checkpoints import Checkpoint, save_checkpoint
from capsnet.training.config import TrainConfig
from capsnet.training.exceptions import EmptyDataset, NonFiniteLoss
from capsnet.training.optim import OptimizerState, adam_step, clip_by_global_norm, lr_schedule
from capsnet.utils.atomic_write.atomic_write import atomic_write

logger = logging.getLogger(__name__)

PathType = Union[str, PathLike]


@dataclass
class StepMetrics:
    step: int
    epoch: int
    loss: float
    margin: float
    reconstruction: float
    learning_rate: float
    gradient_norm: float


@dataclass
class EpochMetrics:
    epoch: int
    step: int
    train_loss: float
    train_accuracy: float
    learning_rate: float
    eval_error: Optional[float] = None


@dataclass
class TrainResult:
    model: CapsNetModel
    optimizer: OptimizerState
    step: int
    epochs: List[EpochMetrics] = field(default_factory=list)
    steps: List[StepMetrics] = field(default_factory=list)


@dataclass
class BatchResult:
    loss: float
    margin: float
    reconstruction: float
    correct: int
    gradients: Dict[str, np.ndarray]


class TrainingCallback:
    """Hooks called by the trainer; override what you need"""

    def on_train_begin(self, trainer: "Trainer") -> None:
        pass

    def on_step_end(self, trainer: "Trainer", metrics: StepMetrics) -> None:
        pass

    def on_epoch_end(self, trainer: "Trainer", metrics: EpochMetrics) -> None:
        pass


class MetricsLog(TrainingCallback):
    """
    JSON lines: a header with the configuration and the assumed defaults, then one line per epoch.

    A fresh run replaces the file with its header; every epoch then appends its own line.  A resumed run keeps the
    existing lines and appends a resume marker instead of a new header.  Nothing time-dependent is logged, so equal
    runs give equal files.
    """

    def __init__(self, path: PathType):
        self.path = Path(path)

    @classmethod
    def beside(cls, checkpoint_path: PathType) -> "MetricsLog":
        return cls(f"{checkpoint_path}.metrics.jsonl")

    def on_train_begin(self, trainer):
        if trainer.step > 0 and self.path.exists():
            self.append({"event": "resume", "step": trainer.step, "config": trainer.config.as_dict()})
            return
        header = {
            "event": "header",
            "dataset": trainer.source.name,
            "examples": len(trainer.source),
            "config": trainer.config.as_dict(),
            "assumed_defaults": trainer.config.assumptions(),
            "architecture": trainer.model.architecture.as_dict(),
        }
        with atomic_write(self.path, "w") as stream:
            stream.write(json.dumps(header, sort_keys=True) + "\n")

    def on_epoch_end(self, trainer, metrics):
        self.append({"event": "epoch", **asdict(metrics)})

    def append(self, record) -> None:
        with open(self.path, "a") as stream:
            stream.write(json.dumps(record, sort_keys=True) + "\n")


def configure_model(model: CapsNetModel, config: TrainConfig) -> CapsNetModel:
    """The model with the loss and routing hyperparameters of a run"""
    return model.with_architecture(routing_iterations=config.routing_iterations, m_plus=config.m_plus,
                                   m_minus=config.m_minus, down_weight=config.down_weight,
                                   reconstruction_scale=config.reconstruction_scale if config.reconstruction else 0.0)


def example_gradients(model: CapsNetModel, example: TrainingExample, step: int = 0):
    """
    Loss and parameter gradients for one example, on a graph of its own.

    :raises NonFiniteLoss: The loss is NaN or Inf
    """
    graph = Graph()
    breakdown = total_loss(model, example.image, example.targets, example.reconstruction_targets, graph=graph)
    if not math.isfinite(breakdown.total):
        raise NonFiniteLoss(step, breakdown.total)
    graph.backward(breakdown.objective)
    gradients = {name: graph.gradient(parameter) for name, parameter in model.parameters.items()}
    return breakdown, gradients


def batch_gradients(model: CapsNetModel, examples: Sequence[TrainingExample], step: int = 0,
                    pool: Optional[ThreadPoolExecutor] = None) -> BatchResult:
    """
    Mean loss and mean gradients over a batch.

    Examples may be processed by a pool of workers; the per-example results are summed in example order either way.
    """
    if pool is None:
        results = [example_gradients(model, example, step) for example in examples]
    else:
        results = list(pool.map(lambda example: example_gradients(model, example, step), examples))

    gradients = {name: np.zeros_like(parameter.data) for name, parameter in model.parameters.items()}
    loss = margin = reconstruction = 0.0
    correct = 0
    for (breakdown, example_gradient), example in zip(results, examples):
        for name in gradients:
            gradients[name] += example_gradient[name]
        loss += breakdown.total
        margin += breakdown.margin
        reconstruction += breakdown.reconstruction
        correct += int(is_correct(breakdown.result.lengths.data, example.targets))
    count = len(examples)
    for name in gradients:
        gradients[name] /= count
    return BatchResult(loss / count, margin / count, reconstruction / count, correct, gradients)


class Trainer:
    """
    Mini-batch training with Adam and an exponentially decaying learning rate.

    Every epoch shuffles the examples with a generator seeded by (seed, epoch); the same generator then draws the
    augmentation of each example, in the main thread and in batch order.  Forward and backward passes may run on a
    pool of threads, one graph per example; the reduction and the optimizer step happen in between batches.
    """

    def __init__(self, model: CapsNetModel, source, config: TrainConfig,
                 callbacks: Sequence[TrainingCallback] = (), eval_source=None, eval_limit: Optional[int] = None,
                 checkpoint_path: Optional[PathType] = None, optimizer: Optional[OptimizerState] = None,
                 step: int = 0, rng: Optional[np.random.Generator] = None):
        if len(source) == 0:
            raise EmptyDataset(source.name)
        self.model = configure_model(model, config)
        self.source = source
        self.config = config
        self.callbacks = list(callbacks)
        self.eval_source = eval_source
        self.eval_limit = eval_limit
        self.checkpoint_path = checkpoint_path
        self.optimizer = optimizer if optimizer is not None else OptimizerState.zeros(self.model.parameters)
        self.step = step
        self.resumed_rng = rng

    @classmethod
    def resume(cls, checkpoint: Checkpoint, source, config: TrainConfig, **kwargs) -> "Trainer":
        """
        Continue from a checkpoint saved at the end of an epoch.

        :raises MissingOptimizerState: The checkpoint holds no optimizer state
        """
        return cls(checkpoint.model(), source, config, optimizer=checkpoint.optimizer_state(), step=checkpoint.step,
                   rng=checkpoint.generator(), **kwargs)

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(len(self.source) / self.config.batch_size)

    @property
    def completed_epochs(self) -> int:
        return self.step // self.steps_per_epoch

    def epoch_generator(self, epoch: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, epoch])

    def train_step(self, examples: Sequence[TrainingExample], epoch: int,
                   pool: Optional[ThreadPoolExecutor] = None) -> Tuple[StepMetrics, int]:
        batch = batch_gradients(self.model, examples, self.step, pool)
        gradient_norm = clip_by_global_norm(batch.gradients, self.config.clip_norm or math.inf)
        learning_rate = lr_schedule(self.step, self.config)
        adam_step(self.model.parameters, batch.gradients, self.optimizer, learning_rate,
                  self.config.beta1, self.config.beta2, self.config.epsilon)
        self.step += 1
        metrics = StepMetrics(step=self.step, epoch=epoch, loss=batch.loss, margin=batch.margin,
                              reconstruction=batch.reconstruction, learning_rate=learning_rate,
                              gradient_norm=gradient_norm)
        logger.debug("Step %d: loss %.5f (margin %.5f, reconstruction %.3f)", self.step, batch.loss, batch.margin,
                     batch.reconstruction)
        return metrics, batch.correct

    def run_epoch(self, epoch: int, rng: np.random.Generator, pool: Optional[ThreadPoolExecutor],
                  result: TrainResult) -> EpochMetrics:
        order = rng.permutation(len(self.source))
        batch_size = self.config.batch_size
        total_loss_sum, correct = 0.0, 0
        for start in range(0, len(order), batch_size):
            examples = [self.source.example(int(index), rng) for index in order[start:start + batch_size]]
            metrics, batch_correct = self.train_step(examples, epoch, pool)
            total_loss_sum += metrics.loss * len(examples)
            correct += batch_correct
            result.steps.append(metrics)
            for callback in self.callbacks:
                callback.on_step_end(self, metrics)

        eval_error = None
        if self.eval_source is not None:
            eval_error = evaluate(self.model, self.eval_source, limit=self.eval_limit).error_rate
        metrics = EpochMetrics(epoch=epoch, step=self.step, train_loss=total_loss_sum / len(order),
                               train_accuracy=correct / len(order), learning_rate=lr_schedule(self.step, self.config),
                               eval_error=eval_error)
        logger.info("Epoch %d: loss %.5f, train accuracy %.4f, learning rate %.3g%s", epoch + 1, metrics.train_loss,
                    metrics.train_accuracy, metrics.learning_rate,
                    "" if eval_error is None else f", eval error {eval_error:.4f}")
        return metrics

    def fit(self) -> TrainResult:
        """Train for the configured number of epochs, counting those a resumed checkpoint already completed"""
        result = TrainResult(self.model, self.optimizer, self.step)
        for callback in self.callbacks:
            callback.on_train_begin(self)
        pool = ThreadPoolExecutor(max_workers=self.config.workers) if self.config.workers > 1 else None
        try:
            for epoch in range(self.completed_epochs, self.config.epochs):
                rng = self.resumed_rng if self.resumed_rng is not None else self.epoch_generator(epoch)
                self.resumed_rng = None
                metrics = self.run_epoch(epoch, rng, pool, result)
                result.epochs.append(metrics)
                if self.checkpoint_path is not None:
                    save_checkpoint(self.checkpoint_path, self.model, self.optimizer, self.step,
                                    self.epoch_generator(epoch + 1))
                for callback in self.callbacks:
                    callback.on_epoch_end(self, metrics)
        finally:
            if pool is not None:
                pool.shutdown()
        result.step = self.step
        return result


def train(model: CapsNetModel, source, config: TrainConfig, callbacks: Sequence[TrainingCallback] = (),
          **kwargs) -> TrainResult:
    """
    Train a model and return it with its metrics.

    :param model:     Initial model; its loss and routing hyperparameters are replaced by those of `config`
    :param source:    Where training examples come from (see capsnet.datasets.sources)
    :param config:    Run hyperparameters
    :param callbacks: Step and epoch hooks, e.g. a MetricsLog
    :param kwargs:    eval_source, eval_limit, checkpoint_path, optimizer, step, rng
    """
    return Trainer(model, source, config, callbacks, **kwargs).fit()
