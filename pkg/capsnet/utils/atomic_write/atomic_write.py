#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import os
import string
from contextlib import contextmanager
from pathlib import Path
from random import SystemRandom


SUFFIX_LENGTH = 14
SUFFIX_CHARACTER_SET = string.ascii_letters + string.digits


def random_suffix(length=SUFFIX_LENGTH, character_set=SUFFIX_CHARACTER_SET):
    """
    Generate a random file-name suffix.
    :param length:        The length of the suffix
    :param character_set: A string, list, or a tuple containing the characters to draw from
    :return:              A random string of the given length and character set
    """
    if length < 1: raise ValueError("Length must be at least 1")
    if len(character_set) < 1: raise ValueError("The character set is empty")
    generator = SystemRandom()
    return "".join(generator.choice(character_set) for _ in range(length))


def temporary_sibling(path) -> Path:
    """A hidden, randomly named file in the same directory as `path`"""
    path = Path(path)
    return path.with_name(f".{path.name}.{random_suffix()}.tmp")


@contextmanager
def atomic_write(path, mode="wb"):
    """
    Write a file so that readers see either the old content or the complete new content.

    The data goes to a temporary sibling which is flushed, synced and renamed onto `path` when the block exits
    normally; on an exception the temporary file is removed and `path` is left untouched.
    :param path: The file to (re)place
    :param mode: "wb" for bytes, "w" for text
    """
    if mode not in ("wb", "w"):
        raise ValueError("atomic_write only opens files for writing")
    temporary = temporary_sibling(path)
    stream = open(temporary, mode)
    try:
        yield stream
        stream.flush()
        os.fsync(stream.fileno())
        stream.close()
        os.replace(temporary, path)
    except BaseException:
        stream.close()
        if temporary.exists():
            temporary.unlink()
        raise
