#!/usr/bin/env python3
"""Run the paired collision scenarios (three wall stiffness values) and print
the comparison table. Writes results under results/collision."""

import sys
from pathlib import Path

from sea_l1ac.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    manifest = ROOT / "configs" / "collision_suite.ini"
    out = ROOT / "results" / "collision"
    sys.exit(main(["suite", str(manifest), "--out-dir", str(out)]))
