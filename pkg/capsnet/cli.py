#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import os
import sys
from typing import Sequence

COMMANDS = ("train", "eval", "gen-multimnist", "perturb", "routing-diag", "segment")
HELP_FLAGS = ("-h", "--help", "help")


def usage(program: str) -> str:
    return (f"usage: {program} <command> [options]\n"
            f"commands: {', '.join(COMMANDS)}\n"
            f"Run '{program} <command> --help' for the options of a command.\n")


def dispatch(argv: Sequence[str], program: str = "manage.py") -> int:
    """
    Run one command and return its exit status: 0 on success, 1 on a runtime error, 2 on a usage error.

    Only the engine's commands are reachable; any other first argument prints the usage and exits with status 2.

    :param argv:    The command name followed by its flags, e.g. ["train", "--data-dir", "data", "--out", "m.cps"]
    :param program: Name shown in usage messages
    """
    if not argv or argv[0] not in COMMANDS:
        if argv and argv[0] in HELP_FLAGS:
            sys.stdout.write(usage(program))
            return 0
        problem = f"{program}: unknown command '{argv[0]}'\n" if argv else f"{program}: no command given\n"
        sys.stderr.write(problem + usage(program))
        return 2

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings.development')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    try:
        execute_from_command_line([program, *argv])
    except SystemExit as exit_:
        code = exit_.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    return 0
