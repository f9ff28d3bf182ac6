#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from pathlib import Path

from django.conf import settings

from capsnet.datasets.idx import load_split
from capsnet.datasets.multimnist import OVERLAP_SAMPLE, generate_multimnist, overlap_statistics, write_multimnist
from capsnet.evaluation.management.base import CapsNetCommand, positive_int


class Command(CapsNetCommand):
    help = "Generate a MultiMNIST file by overlaying every digit of a split on partners of other classes"

    def add_arguments(self, parser):
        self.add_data_dir(parser, required=True)
        parser.add_argument("--split", required=True, choices=["train", "test"])
        parser.add_argument("--per-digit", type=positive_int, default=settings.CAPSNET["MULTIMNIST"]["PER_DIGIT"],
                            help="Composites per base digit (default %(default)s)")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--subset", type=positive_int, help="Use only the first N digits of the split")
        parser.add_argument("--workers", type=positive_int, default=settings.CAPSNET["WORKERS"])
        parser.add_argument("--out", required=True, type=Path)

    def run(self, **options):
        base = load_split(options["data_dir"], options["split"]).subset(options["subset"])
        composites = generate_multimnist(base, options["per_digit"], options["seed"], options["workers"])
        write_multimnist(composites, options["out"])
        statistics = overlap_statistics(base, composites.subset(OVERLAP_SAMPLE))
        self.info(f"Wrote {len(composites)} composites to {options['out']}")
        self.info(f"mean bounding-box overlap {statistics.box_overlap:.3f} (intersection over the smaller box), "
                  f"mean IoU {statistics.intersection_over_union:.3f}")
