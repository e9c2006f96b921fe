#!/usr/bin/env python3
"""
neurogate command-line entry point.

Usage:
    python main.py <subcommand> [options]

See `python main.py --help` for the subcommands.
"""

import sys

from neurogate.cli import main

if __name__ == "__main__":
    sys.exit(main())
