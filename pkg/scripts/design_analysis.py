#!/usr/bin/env python3
"""Produce the root-locus and filter design-condition tables under
results/analysis."""

import sys
from pathlib import Path

from sea_l1ac.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    config = ROOT / "configs" / "analysis.ini"
    out = ROOT / "results" / "analysis"
    rc = main(["analyze", "rootlocus", str(config), "--out-dir", str(out)])
    rc = rc or main(["analyze", "condition", str(config), "--out-dir", str(out)])
    sys.exit(rc)
