"""
Main entry point for the ordinal label encoding experiments.

Usage:
    python app.py encode --scheme sord_circular --k 4 --s 1
    python app.py sweep --config configs/onehot.cfg --config configs/sord_circular.cfg
"""

import sys

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
