#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from pathlib import Path

from django.conf import settings

from capsnet.datasets.idx import load_split
from capsnet.evaluation.diagnostics import routing_diagnostics, write_routing_csv
from capsnet.evaluation.management.base import CapsNetCommand, positive_int, single_digit_source
from capsnet.training.checkpoints import load_checkpoint


class Command(CapsNetCommand):
    help = "Measure the mean absolute change of the routing logits at every routing iteration"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", required=True, type=Path)
        self.add_data_dir(parser, required=True)
        parser.add_argument("--iters", type=int, default=5, help="Routing iterations to trace (default %(default)s)")
        parser.add_argument("--limit", type=positive_int, default=settings.CAPSNET["EVAL"]["ROUTING_DIAGNOSTIC_LIMIT"],
                            help="Test digits to average over (default %(default)s)")
        parser.add_argument("--out", required=True, type=Path)

    def run(self, **options):
        model = load_checkpoint(options["ckpt"]).model()
        source = single_digit_source(load_split(options["data_dir"], "test"), model.architecture.input_size)
        diagnostics = routing_diagnostics(model, source, options["iters"], options["limit"])
        write_routing_csv(diagnostics, options["out"])
        for iteration, value in enumerate(diagnostics.mean_logit_changes, start=1):
            self.info(f"iteration {iteration}: {value:.6g}")
        self.info(f"Wrote {options['out']} ({diagnostics.count} digits)")
