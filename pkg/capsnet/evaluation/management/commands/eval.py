#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from pathlib import Path

from django.conf import settings

from capsnet.datasets.affine import AffineBounds, affine_test_set
from capsnet.datasets.idx import load_split
from capsnet.datasets.multimnist import read_multimnist
from capsnet.datasets.sources import ImageSource, MultiMnistSource
from capsnet.evaluation.management.base import CapsNetCommand, positive_int, single_digit_source
from capsnet.evaluation.metrics import evaluate, write_report_csv
from capsnet.training.checkpoints import load_checkpoint


class Command(CapsNetCommand):
    help = "Report the classification error of a checkpoint on MNIST, MultiMNIST or affine-transformed MNIST"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", required=True, type=Path, help="Checkpoint to evaluate")
        self.add_data_dir(parser, required=True)
        parser.add_argument("--multimnist", type=Path, help="Evaluate on this MultiMNIST file")
        parser.add_argument("--split", choices=["train", "test"], default="test",
                            help="Split the digits (or the MultiMNIST provenance) come from (default %(default)s)")
        parser.add_argument("--affine", action="store_true",
                            help="Evaluate on randomly affine-transformed 40x40 digits")
        parser.add_argument("--limit", type=positive_int, help="Evaluate only the first N examples")
        parser.add_argument("--workers", type=positive_int, default=settings.CAPSNET["WORKERS"])
        parser.add_argument("--report", type=Path, help="Write the report as CSV")

    def run(self, **options):
        model = load_checkpoint(options["ckpt"]).model()
        split = load_split(options["data_dir"], options["split"])
        if options["multimnist"]:
            source = MultiMnistSource(read_multimnist(options["multimnist"]), split)
        elif options["affine"]:
            transformed = affine_test_set(split.subset(options["limit"]), settings.CAPSNET["EVAL"]["SEED"],
                                          AffineBounds.from_settings())
            source = ImageSource(transformed)
        else:
            source = single_digit_source(split, model.architecture.input_size)

        report = evaluate(model, source, limit=options["limit"], workers=options["workers"])
        self.info(f"{report.dataset}: {report.errors} of {report.count} wrong, error rate {report.error_rate:.4%}")
        self.info(f"mean margin loss {report.mean_margin:.5f}, mean reconstruction loss "
                  f"{report.mean_reconstruction:.3f}")
        if options["report"]:
            write_report_csv(report, options["report"])
            self.info(f"Wrote {options['report']}")
