#!/usr/bin/env python
"""Command-line entry point: python manage.py <train|eval|gen-multimnist|perturb|routing-diag|segment> ..."""

#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

import sys

from capsnet.cli import dispatch


def main():
    sys.exit(dispatch(sys.argv[1:], sys.argv[0]))


if __name__ == '__main__':
    main()
