"""Trace file format: CSV with a single metadata comment line.

The first line carries ``# key=value`` pairs needed to interpret the trace,
the second line is the fixed column header, every following line is one
sample. Floats are written with shortest round-trip representation, so
export -> import -> export is byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .harness import TRACE_COLUMNS, RunTrace


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def export_trace(trace: RunTrace, path) -> Path:
    """Write a trace to ``path``; returns the path written."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            meta = " ".join(f"{k}={_fmt(v)}" for k, v in trace.meta.items())
            fh.write(f"# {meta}\n")
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            arrays = [trace.columns[name] for name in TRACE_COLUMNS]
            for i in range(len(trace)):
                fh.write(",".join(repr(float(a[i])) for a in arrays) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    return path


def import_trace(path) -> RunTrace:
    """Read back a trace written by export_trace."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise OSError(f"cannot read trace from {path}: {exc}") from exc
    meta: dict = {}
    idx = 0
    if lines and lines[0].startswith("#"):
        for token in lines[0][1:].split():
            key, _, raw = token.partition("=")
            if key in ("name", "controller"):
                meta[key] = raw
                continue
            try:
                meta[key] = float(raw)
            except ValueError:
                meta[key] = raw
        idx = 1
    header = lines[idx].split(",")
    if tuple(header) != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header in {path}")
    rows = [line.split(",") for line in lines[idx + 1:] if line]
    data = np.array([[float(v) for v in row] for row in rows]) if rows else \
        np.zeros((0, len(TRACE_COLUMNS)))
    columns = {name: data[:, j].copy() if len(rows) else np.zeros(0)
               for j, name in enumerate(TRACE_COLUMNS)}
    return RunTrace(columns=columns, meta=meta)


_PLOT_TEMPLATE = '''"""Plot the recorded step response: position, motor current, and the
link-side disturbance estimate (three stacked panels)."""

import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / {csv_name!r}

cols = {{}}
with csv_path.open() as fh:
    meta_line = fh.readline()
    reader = csv.DictReader(fh)
    for row in reader:
        for key, val in row.items():
            cols.setdefault(key, []).append(float(val))

target = None
for token in meta_line.lstrip("# ").split():
    if token.startswith("q_d_amplitude="):
        target = float(token.split("=", 1)[1])

fig, axes = plt.subplots(3, 1, figsize=(7, 9), sharex=True)
axes[0].plot(cols["t_s"], cols["q_rad"], label="link position q")
if target is not None:
    axes[0].axhline(target, color="k", ls="--", lw=0.8, label="target")
axes[0].set_ylabel("q [rad]")
axes[0].legend()
axes[1].plot(cols["t_s"], cols["current_permil"], color="tab:red")
axes[1].set_ylabel("motor current [permil]")
axes[2].plot(cols["t_s"], cols["sigma22_hat"], color="tab:green")
axes[2].set_ylabel("sigma22 estimate [rad/s^2]")
axes[2].set_xlabel("t [s]")
fig.tight_layout()
out = csv_path.with_suffix(".png")
fig.savefig(out, dpi=130)
print(f"wrote {{out}}")
'''


def export_plotscript(trace_csv_name: str, path) -> Path:
    """Write a standalone matplotlib script that renders the trace panels."""
    path = Path(path)
    try:
        path.write_text(_PLOT_TEMPLATE.format(csv_name=str(trace_csv_name)),
                        encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write plot script to {path}: {exc}") from exc
    return path


def export_table(rows, path) -> Path:
    """Write generic comma-separated rows (header included by the caller)."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write table to {path}: {exc}") from exc
    return path
