"""Render the case-study figures from simulation trace CSVs.

Consumes only the CSV files the pipeline emits (never the pipeline itself):
one figure overlaying the base and optimized control inputs, one 2x2 grid of
tank-level deviations, both with the attack onset marked.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


class PlotError(Exception):
    pass


@dataclass(frozen=True)
class PlotSpec:
    base_csv: str
    opt_csv: str
    onset: float
    out_dir: str = "."
    input_columns: tuple = ("u1", "u2")
    level_columns: tuple = ("x1", "x2", "x3", "x4")
    fmt: str = "png"


def read_trace(path):
    """Columns of a trace CSV as {name: array}."""
    path = Path(path)
    if not path.exists():
        raise PlotError(f"trace file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise PlotError(f"{path}: malformed trace table")
    return {name: data[:, j] for j, name in enumerate(header)}


def require_columns(trace, columns, path):
    missing = [c for c in columns if c not in trace]
    if missing:
        raise PlotError(f"{path}: missing columns {missing}")


def render_case_figures(spec: PlotSpec):
    """Write the two figures; returns their paths."""
    base = read_trace(spec.base_csv)
    opt = read_trace(spec.opt_csv)
    for trace, path in ((base, spec.base_csv), (opt, spec.opt_csv)):
        require_columns(trace, ("time",) + spec.input_columns + spec.level_columns, path)
    if base["time"].shape != opt["time"].shape or not np.array_equal(base["time"], opt["time"]):
        raise PlotError("trace files do not share the same time grid")
    t = base["time"]
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    fig, axes = plt.subplots(len(spec.input_columns), 1, figsize=(7, 5), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, col in zip(axes, spec.input_columns):
        ax.plot(t, base[col], label=col, lw=0.9)
        ax.plot(t, opt[col], label=col + "*", lw=0.9)
        ax.axvline(spec.onset, color="k", ls="--", lw=0.8)
        ax.set_ylabel(f"{col} [V]")
        ax.legend(loc="upper left", fontsize=8)
    axes[-1].set_xlabel("time [s]")
    fig.suptitle("control inputs: base vs optimized realization")
    inputs_path = out / f"inputs.{spec.fmt}"
    fig.savefig(inputs_path, dpi=150, bbox_inches="tight")
    plt.close(fig)

    fig, axes = plt.subplots(2, 2, figsize=(8, 6), sharex=True)
    for ax, col in zip(axes.ravel(), spec.level_columns):
        ax.plot(t, base[col], label=col, lw=0.9)
        ax.plot(t, opt[col], label=col + "*", lw=0.9)
        ax.axvline(spec.onset, color="k", ls="--", lw=0.8)
        ax.set_title(f"level deviation {col}")
        ax.legend(loc="upper left", fontsize=8)
    for ax in axes[-1]:
        ax.set_xlabel("time [s]")
    fig.suptitle("tank levels: base vs optimized realization")
    levels_path = out / f"levels.{spec.fmt}"
    fig.savefig(levels_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return inputs_path, levels_path


def max_plotted_difference(spec: PlotSpec):
    """Largest |base - optimized| over every plotted column; 0 for identical
    inputs. Pure function of the CSVs, used by the overlay test."""
    base = read_trace(spec.base_csv)
    opt = read_trace(spec.opt_csv)
    cols = spec.input_columns + spec.level_columns
    for trace, path in ((base, spec.base_csv), (opt, spec.opt_csv)):
        require_columns(trace, ("time",) + cols, path)
    if not np.array_equal(base["time"], opt["time"]):
        raise PlotError("trace files do not share the same time grid")
    return max(float(np.abs(base[c] - opt[c]).max()) for c in cols)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="traceplots",
                                 description="render case figures from trace CSVs")
    ap.add_argument("--base", required=True, help="base-controller trace CSV")
    ap.add_argument("--opt", required=True, help="optimized-realization trace CSV")
    ap.add_argument("--onset", type=float, default=125.0, help="attack onset [s]")
    ap.add_argument("--out-dir", default=".")
    ap.add_argument("--format", default="png", choices=("png", "pdf", "svg"))
    args = ap.parse_args(argv)
    spec = PlotSpec(base_csv=args.base, opt_csv=args.opt, onset=args.onset,
                    out_dir=args.out_dir, fmt=args.format)
    try:
        paths = render_case_figures(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
