#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from pathlib import Path

from django.core.management.base import CommandError

from capsnet.datasets.multimnist import read_multimnist
from capsnet.datasets.sources import normalize
from capsnet.evaluation.diagnostics import segment, write_segmentation_csv
from capsnet.evaluation.management.base import CapsNetCommand
from capsnet.evaluation.rendering import save_png, segmentation_image
from capsnet.training.checkpoints import load_checkpoint


class Command(CapsNetCommand):
    help = "Split a MultiMNIST composite into its two digits by reconstructing the two most active capsules"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", required=True, type=Path)
        parser.add_argument("--multimnist", required=True, type=Path)
        parser.add_argument("--index", required=True, type=int)
        parser.add_argument("--out", required=True, type=Path, help="PNG overlay; the numbers go next to it as CSV")
        parser.add_argument("--classes", nargs=2, type=int, metavar=("FIRST", "SECOND"),
                            help="Reconstruct these classes instead of the two most active")

    def run(self, **options):
        model = load_checkpoint(options["ckpt"]).model()
        composites = read_multimnist(options["multimnist"])
        index = options["index"]
        if not 0 <= index < len(composites):
            raise CommandError(f"--index must be in 0..{len(composites) - 1}")
        composite = composites[index]

        result = segment(model, normalize(composite.pixels), options["classes"])
        out = options["out"]
        save_png(segmentation_image(result), out)
        write_segmentation_csv(result, out.with_suffix(".csv"))
        predicted = "{" + ", ".join(str(label) for label in sorted(result.predicted)) + "}"
        self.info(f"labels {set(composite.labels)}, predicted {predicted}, reconstructed {list(result.classes)}")
        self.info(f"Wrote {out}")
