#!/usr/bin/env python3
"""
Command-line entry point for the Rabi-Hubbard phase-diagram tools.
"""
import sys

from rabihubbard.cli import main

if __name__ == "__main__":
    sys.exit(main())
