#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import json
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from unittest import TestCase

import numpy as np

from capsnet.datasets.sources import ImageSource, ShiftedMnist
from capsnet.network.models import Architecture, CapsNetModel
from capsnet.tests.factories import digit_set
from capsnet.training.checkpoints import load_checkpoint, save_checkpoint
from capsnet.training.config import TrainConfig
from capsnet.training.exceptions import EmptyDataset, MissingOptimizerState, NonFiniteLoss
from capsnet.training.trainer import (MetricsLog, Trainer, TrainingCallback, batch_gradients, example_gradients,
                                      train)


def _model(seed=0):
    return CapsNetModel.initialize(Architecture.tiny(), seed=seed)


class StepCounter(TrainingCallback):
    def __init__(self):
        self.steps = []
        self.epochs = []

    def on_step_end(self, trainer, metrics):
        self.steps.append(metrics.step)

    def on_epoch_end(self, trainer, metrics):
        self.epochs.append(metrics.epoch)


class TestBatchGradients(TestCase):

    def setUp(self) -> None:
        self.model = _model()
        self.source = ImageSource(digit_set(2, size=24))
        self.examples = [self.source.example(0), self.source.example(1)]

    def test_mean_of_example_gradients(self):
        """Ensures the batch gradient is the mean of the per-example gradients"""
        batch = batch_gradients(self.model, self.examples)
        _, first = example_gradients(self.model, self.examples[0])
        _, second = example_gradients(self.model, self.examples[1])
        for name in first:
            np.testing.assert_allclose(batch.gradients[name], (first[name] + second[name]) / 2, rtol=1e-5,
                                       atol=1e-9)

    def test_workers_do_not_change_the_result(self):
        """Ensures a pool of workers reduces to the same gradients as a single thread"""
        single = batch_gradients(self.model, self.examples)
        with ThreadPoolExecutor(max_workers=2) as pool:
            pooled = batch_gradients(self.model, self.examples, pool=pool)
        for name in single.gradients:
            np.testing.assert_array_equal(pooled.gradients[name], single.gradients[name])
        assert pooled.loss == single.loss

    def test_non_finite_loss(self):
        """Ensures a NaN loss stops training"""
        self.model.parameters["digit.weight"].data[...] = np.nan
        self.assertRaises(NonFiniteLoss, example_gradients, self.model, self.examples[0])


class TestTrainer(TestCase):
    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)

    def tearDown(self) -> None:
        self.directory.cleanup()

    def test_steps_per_epoch(self):
        """Ensures an epoch over N examples with batch B takes ceil(N / B) steps"""
        counter = StepCounter()
        result = train(_model(), ImageSource(digit_set(10, size=24)), TrainConfig(batch_size=4, epochs=2),
                       [counter])
        assert counter.steps == [1, 2, 3, 4, 5, 6]
        assert counter.epochs == [0, 1]
        assert result.step == 6
        assert len(result.epochs) == 2

    def test_overfits_one_example(self):
        """Ensures repeated steps on one example drive its loss down"""
        config = TrainConfig(batch_size=1, epochs=40, learning_rate=0.01)
        result = train(_model(), ImageSource(digit_set(1, size=24)), config)
        losses = [metrics.loss for metrics in result.steps]
        assert losses[-1] < losses[4]
        assert losses[-1] < losses[0]

    def test_same_seed_same_metrics(self):
        """Ensures two runs with the same seed write identical metrics logs"""
        logs = []
        for run in range(2):
            path = self.root / f"run{run}.jsonl"
            train(_model(), ShiftedMnist(digit_set(6, size=24)), TrainConfig(batch_size=4, epochs=2, seed=3),
                  [MetricsLog(path)])
            logs.append(path.read_text())
        assert logs[0] == logs[1]

    def test_same_seed_same_checkpoint(self):
        """Ensures two runs with the same seed save byte-identical checkpoints"""
        saved = []
        for run in range(2):
            path = self.root / f"run{run}.cps"
            train(_model(), ShiftedMnist(digit_set(6, size=24)), TrainConfig(batch_size=4, epochs=2, seed=3),
                  checkpoint_path=path)
            saved.append(path.read_bytes())
        assert saved[0] == saved[1]

    def test_metrics_log_appends_on_resume(self):
        """Ensures a resumed run keeps the lines already logged and appends its own"""
        source = ShiftedMnist(digit_set(10, size=24))
        path = self.root / "model.cps"
        log = MetricsLog.beside(path)
        train(_model(), source, TrainConfig(batch_size=4, epochs=1, seed=1), [log], checkpoint_path=path)
        before = log.path.read_text()
        Trainer.resume(load_checkpoint(path), source, TrainConfig(batch_size=4, epochs=2, seed=1),
                       callbacks=[log]).fit()
        after = log.path.read_text()
        assert after.startswith(before)
        added = [json.loads(line) for line in after[len(before):].splitlines()]
        assert [line["event"] for line in added] == ["resume", "epoch"]
        assert added[0]["step"] == 3
        assert added[1]["epoch"] == 1

    def test_metrics_log_header(self):
        """Ensures the log starts with the configuration and the assumed defaults, then one line per epoch"""
        path = self.root / "model.cps"
        config = TrainConfig(batch_size=4, epochs=2)
        train(_model(), ImageSource(digit_set(6, size=24)), config, [MetricsLog.beside(path)],
              eval_source=ImageSource(digit_set(4, size=24, seed=1)))
        lines = [json.loads(line) for line in (self.root / "model.cps.metrics.jsonl").read_text().splitlines()]
        assert lines[0]["event"] == "header"
        assert lines[0]["assumed_defaults"] == config.assumptions()
        assert lines[0]["examples"] == 6
        assert [line["epoch"] for line in lines[1:]] == [0, 1]
        assert all(0 <= line["eval_error"] <= 1 for line in lines[1:])

    def test_resume_reproduces_uninterrupted_run(self):
        """Ensures stopping after one epoch and resuming gives the same model as training straight through"""
        source = ShiftedMnist(digit_set(10, size=24))
        straight = train(_model(), source, TrainConfig(batch_size=4, epochs=2, seed=1))

        path = self.root / "model.cps"
        train(_model(), source, TrainConfig(batch_size=4, epochs=1, seed=1), checkpoint_path=path)
        checkpoint = load_checkpoint(path)
        assert checkpoint.step == 3
        resumed = Trainer.resume(checkpoint, source, TrainConfig(batch_size=4, epochs=2, seed=1)).fit()

        assert resumed.step == straight.step == 6
        assert [metrics.epoch for metrics in resumed.epochs] == [1]
        for name, parameter in straight.model.parameters.items():
            np.testing.assert_array_equal(resumed.model.parameters[name].data, parameter.data)

    def test_resume_needs_optimizer_state(self):
        """Ensures an evaluation-only checkpoint cannot be resumed"""
        path = self.root / "eval.cps"
        save_checkpoint(path, _model())
        self.assertRaises(MissingOptimizerState, Trainer.resume, load_checkpoint(path),
                          ImageSource(digit_set(4, size=24)), TrainConfig())

    def test_run_configures_the_model(self):
        """Ensures the run's routing and loss settings replace the model's"""
        trainer = Trainer(_model(), ImageSource(digit_set(4, size=24)),
                          TrainConfig(routing_iterations=2, reconstruction=False))
        assert trainer.model.architecture.routing_iterations == 2
        assert trainer.model.architecture.reconstruction_scale == 0.0

    def test_empty_source(self):
        """Ensures training needs at least one example"""
        empty = ImageSource(digit_set(4, size=24).subset(0))
        self.assertRaises(EmptyDataset, Trainer, _model(), empty, TrainConfig())
