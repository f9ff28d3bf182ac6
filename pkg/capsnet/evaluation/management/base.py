#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import logging
from argparse import ArgumentTypeError
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from capsnet.datasets.augment import TRANSLATED_CANVAS
from capsnet.datasets.idx import ImageSet
from capsnet.datasets.sources import ImageSource, TranslatedMnist
from capsnet.exceptions import CapsNetError, InvalidArgument

logger = logging.getLogger(__name__)


class CapsNetCommand(BaseCommand):
    """
    Base of the engine's commands.

    Subclasses implement `run`.  Engine errors and file errors become CommandError, which Django reports on stderr
    with exit status 1; option values the engine refuses exit with status 2, like other usage errors.
    """
    requires_system_checks = []

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except InvalidArgument as error:
            logger.debug("%s refused its options", self.__module__, exc_info=True)
            raise CommandError(str(error), returncode=2)
        except (CapsNetError, OSError) as error:
            logger.debug("%s failed", self.__module__, exc_info=True)
            raise CommandError(str(error))

    def run(self, **options) -> None:
        raise NotImplementedError("subclasses of CapsNetCommand must provide a run() method")

    def add_data_dir(self, parser, required: bool) -> None:
        if required:
            parser.add_argument("--data-dir", required=True, type=Path, help="Directory with the MNIST IDX files")
        else:
            parser.add_argument("--data-dir", type=Path, default=Path(settings.CAPSNET["DATA_DIR"]),
                                help="Directory with the MNIST IDX files (default: %(default)s)")

    def info(self, message: str) -> None:
        self.stdout.write(message)


def positive_int(value: str) -> int:
    """argparse type of counts that must be at least 1"""
    try:
        number = int(value)
    except ValueError:
        raise ArgumentTypeError(f"{value!r} is not an integer")
    if number < 1:
        raise ArgumentTypeError(f"{value} is not a positive integer")
    return number


def single_digit_source(images: ImageSet, input_size: int):
    """Plain digits for 28x28 models, digits on a 40x40 canvas for translated-MNIST models"""
    if input_size == images.image_size[0]:
        return ImageSource(images)
    if input_size == TRANSLATED_CANVAS:
        return TranslatedMnist(images)
    raise CommandError(f"The model expects {input_size}x{input_size} inputs, the data holds "
                       f"{images.image_size[0]}x{images.image_size[1]} digits")
