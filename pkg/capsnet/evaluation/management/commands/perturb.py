#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from pathlib import Path

from django.core.management.base import CommandError

from capsnet.datasets.idx import load_split
from capsnet.evaluation.diagnostics import perturb_dimensions, write_perturbation_csv
from capsnet.evaluation.management.base import CapsNetCommand, single_digit_source
from capsnet.evaluation.rendering import perturbation_image, save_png
from capsnet.training.checkpoints import load_checkpoint


class Command(CapsNetCommand):
    help = "Decode a test digit with each dimension of its capsule nudged from -0.25 to 0.25 and save the grid"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", required=True, type=Path)
        parser.add_argument("--image-index", required=True, type=int, help="Index of the digit in the split")
        parser.add_argument("--out", required=True, type=Path, help="PNG grid; the numbers go next to it as CSV")
        self.add_data_dir(parser, required=False)
        parser.add_argument("--split", choices=["train", "test"], default="test")

    def run(self, **options):
        model = load_checkpoint(options["ckpt"]).model()
        split = load_split(options["data_dir"], options["split"])
        index = options["image_index"]
        if not 0 <= index < len(split):
            raise CommandError(f"--image-index must be in 0..{len(split) - 1}")
        example = single_digit_source(split, model.architecture.input_size).example(index)

        grid = perturb_dimensions(model, example.image, target_class=example.targets[0])
        out = options["out"]
        save_png(perturbation_image(grid), out)
        write_perturbation_csv(grid, out.with_suffix(".csv"))
        self.info(f"Wrote a {grid.reconstructions.shape[0]}x{len(grid.offsets)} grid for class "
                  f"{grid.target_class} to {out}")
