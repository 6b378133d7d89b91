#!/usr/bin/env python3
"""Run the six load-variation scenarios and print the comparison table.

Writes traces, plot scripts, and the summary CSV under results/load_variation.
"""

import sys
from pathlib import Path

from sea_l1ac.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    manifest = ROOT / "configs" / "load_variation_suite.ini"
    out = ROOT / "results" / "load_variation"
    sys.exit(main(["suite", str(manifest), "--out-dir", str(out)]))
