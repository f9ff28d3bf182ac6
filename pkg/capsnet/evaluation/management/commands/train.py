#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from pathlib import Path

from django.conf import settings

from capsnet.datasets.idx import load_split
from capsnet.datasets.multimnist import read_multimnist
from capsnet.datasets.sources import ImageSource, MultiMnistSource, ShiftedMnist, TranslatedMnist
from capsnet.evaluation.management.base import CapsNetCommand, positive_int
from capsnet.network.models import Architecture, CapsNetModel, parameter_count
from capsnet.training.checkpoints import load_checkpoint
from capsnet.training.config import TrainConfig
from capsnet.training.trainer import MetricsLog, Trainer


class Command(CapsNetCommand):
    help = "Train a CapsNet on shifted MNIST, translated 40x40 MNIST or MultiMNIST and save a checkpoint"

    def add_arguments(self, parser):
        self.add_data_dir(parser, required=True)
        parser.add_argument("--out", required=True, type=Path, help="Checkpoint to write after every epoch")
        parser.add_argument("--multimnist", type=Path, help="Train on this MultiMNIST file, built from the train split")
        parser.add_argument("--translate-40", action="store_true",
                            help="Train on digits placed at random on a 40x40 canvas")
        parser.add_argument("--routing", type=positive_int, help="Routing iterations (default 3)")
        parser.add_argument("--no-recon", action="store_true", help="Train without the reconstruction loss")
        parser.add_argument("--epochs", type=positive_int)
        parser.add_argument("--batch", type=positive_int, help="Batch size (default 128)")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--orphan", action="store_true", help="Add a none-of-the-above routing parent")
        parser.add_argument("--learnable-priors", action="store_true", help="Learn the initial routing logits")
        parser.add_argument("--learning-rate", type=float)
        parser.add_argument("--decay-steps", type=positive_int)
        parser.add_argument("--clip-norm", type=float, help="Clip gradients to this global norm")
        parser.add_argument("--workers", type=positive_int, help="Threads computing per-example gradients")
        parser.add_argument("--subset", type=positive_int, help="Train on this many examples of the training set")
        parser.add_argument("--max-shift", type=int, default=settings.CAPSNET["AUGMENT"]["MAX_SHIFT"],
                            help="Largest augmentation shift in pixels (default %(default)s)")
        parser.add_argument("--eval-limit", type=positive_int,
                            help="Evaluate on this many test examples after every epoch")
        parser.add_argument("--no-eval", action="store_true", help="Skip the evaluation after every epoch")
        parser.add_argument("--resume", type=Path, help="Continue from a checkpoint with optimizer state")

    def run(self, **options):
        config = TrainConfig.from_settings(
            batch_size=options["batch"],
            epochs=options["epochs"],
            routing_iterations=options["routing"],
            reconstruction=False if options["no_recon"] else None,
            seed=options["seed"],
            learning_rate=options["learning_rate"],
            decay_steps=options["decay_steps"],
            clip_norm=options["clip_norm"],
            workers=options["workers"],
        )
        data_dir = options["data_dir"]
        train_split = load_split(data_dir, "train")
        eval_source = None

        if options["multimnist"]:
            if options["decay_steps"] is None:
                config = config.for_multimnist()
            source = MultiMnistSource(read_multimnist(options["multimnist"]).subset(options["subset"]), train_split)
        else:
            train_split = train_split.subset(options["subset"], seed=config.seed)
            if options["translate_40"]:
                source = TranslatedMnist(train_split)
            else:
                source = ShiftedMnist(train_split, options["max_shift"])
            if not options["no_eval"]:
                test_split = load_split(data_dir, "test")
                eval_source = TranslatedMnist(test_split) if options["translate_40"] else ImageSource(test_split)

        out = options["out"]
        extra = dict(callbacks=[MetricsLog.beside(out)], eval_source=eval_source, eval_limit=options["eval_limit"],
                     checkpoint_path=out)
        if options["resume"]:
            trainer = Trainer.resume(load_checkpoint(options["resume"]), source, config, **extra)
        else:
            architecture = Architecture(input_size=source.input_size, orphan=options["orphan"],
                                        learnable_priors=options["learnable_priors"])
            model = CapsNetModel.initialize(architecture, seed=config.seed)
            trainer = Trainer(model, source, config, **extra)

        without_decoder, with_decoder = parameter_count(trainer.model)
        self.info(f"Training on {len(source)} examples of {source.name}: {trainer.steps_per_epoch} steps per epoch, "
                  f"{with_decoder:,} parameters ({without_decoder:,} without the decoder)")
        result = trainer.fit()
        for metrics in result.epochs:
            evaluation = "" if metrics.eval_error is None else f", eval error {metrics.eval_error:.4f}"
            self.info(f"epoch {metrics.epoch + 1}: loss {metrics.train_loss:.5f}, "
                      f"train accuracy {metrics.train_accuracy:.4f}{evaluation}")
        self.info(f"Saved {out} after {result.step} steps")
