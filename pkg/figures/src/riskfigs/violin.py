"""Violin plot of per-trial selected-candidate risks: method x functional.

Usage: plot-violin violin.csv --alpha 2.5 --out figs/
Draws one violin per (method, functional) group present in the CSV, with a
horizontal line at the target level.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .csvio import FigureError, MalformedCsvError, read_table

FUNCTIONALS = [("mean_risk", "mean risk"), ("quantile_risk", "quantile risk")]


def build_figure(table, alpha: float):
    table.require("method", "trial", "mean_risk", "quantile_risk")
    methods = sorted({row["method"] for row in table.rows})
    groups = []
    labels = []
    for method in methods:
        rows = [r for r in table.rows if r["method"] == method]
        for column, pretty in FUNCTIONALS:
            values = table.floats(column, rows)
            if values:
                groups.append(values)
                labels.append(f"{method}\n{pretty}")
    if not groups:
        raise MalformedCsvError("no plottable values (all functional cells empty)")
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.violinplot(groups, showmedians=True)
    ax.axhline(alpha, color="black", linestyle="--", linewidth=1.6,
               label=f"target level {alpha:g}")
    ax.set_xticks(range(1, len(labels) + 1), labels)
    ax.set_ylabel("risk of the selected candidate")
    ax.set_title("Selected-candidate risk across repeated calibrations")
    ax.legend()
    fig.tight_layout()
    drawn = {"alpha": alpha, "violins": len(groups)}
    return fig, drawn


def render(csv_path, alpha: float, out_dir, fmt: str = "png"):
    table = read_table(csv_path)
    fig, drawn = build_figure(table, alpha=alpha)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"violin.{fmt}"
    fig.savefig(target)
    plt.close(fig)
    return target, drawn


def build_parser():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", help="violin.csv from the harness report command")
    parser.add_argument("--alpha", type=float, required=True, help="target risk level")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", default="png", choices=["png", "svg", "pdf"],
                        help="png (default) or a vector format")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        target, _ = render(args.csv, args.alpha, args.out, fmt=args.format)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except FigureError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {target}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
