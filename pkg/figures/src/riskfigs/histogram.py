"""Overlaid per-method risk histograms with target-level line and quantile markers.

Usage: plot-histogram histogram.csv --alpha 2.5 --q 0.1 --out figs/
The quantile markers are read from the CSV's `# marker` comments, exactly
as the harness computed them.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .csvio import FigureError, read_table

METHOD_LABELS = {"mean": "mean-risk control", "quantile": "quantile-risk control"}
METHOD_COLORS = {"mean": "tab:orange", "quantile": "tab:blue"}


def build_figure(table, alpha: float, q: float, bins: int = 40):
    """Returns (figure, drawn) where drawn records the exact line positions."""
    table.require("method", "episode", "risk")
    methods = sorted({row["method"] for row in table.rows})
    fig, ax = plt.subplots(figsize=(7, 4.2))
    drawn = {"alpha": alpha, "markers": {}}
    for method in methods:
        rows = [r for r in table.rows if r["method"] == method]
        risks = table.floats("risk", rows)
        color = METHOD_COLORS.get(method)
        ax.hist(risks, bins=bins, alpha=0.55, color=color,
                label=METHOD_LABELS.get(method, method))
        marker = table.markers.get(method)
        if marker is not None:
            ax.axvline(marker, color=color, linestyle=":", linewidth=1.6)
            drawn["markers"][method] = marker
    ax.axvline(alpha, color="black", linestyle="--", linewidth=1.6,
               label=f"target level {alpha:g}")
    ax.set_xlabel("per-episode risk")
    ax.set_ylabel("test episodes")
    ax.set_title(f"Test risk by calibration method (markers: empirical {1 - q:g}-quantile)")
    ax.legend()
    fig.tight_layout()
    return fig, drawn


def render(csv_path, alpha: float, q: float, out_dir, fmt: str = "png", bins: int = 40):
    table = read_table(csv_path)
    fig, drawn = build_figure(table, alpha=alpha, q=q, bins=bins)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"histogram.{fmt}"
    fig.savefig(target)
    plt.close(fig)
    return target, drawn


def build_parser():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", help="histogram.csv from the harness report command")
    parser.add_argument("--alpha", type=float, required=True, help="target risk level")
    parser.add_argument("--q", type=float, required=True, help="outage rate of the markers")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", default="png", choices=["png", "svg", "pdf"],
                        help="png (default) or a vector format")
    parser.add_argument("--bins", type=int, default=40)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        target, _ = render(args.csv, args.alpha, args.q, args.out,
                           fmt=args.format, bins=args.bins)
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
