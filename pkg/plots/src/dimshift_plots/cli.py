"""Command-line entry point: render both figures from a results directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from dimshift_plots.figures import FigureSpec, InputError, plot_curves, plot_jumpstart


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dimshift-plots",
        description="Render learning-curve panels and jumpstart bar charts from result CSVs.",
    )
    parser.add_argument("--in", dest="in_dir", required=True, help="directory with curve/summary CSVs")
    parser.add_argument("--out", dest="out_dir", required=True, help="directory for figure files")
    parser.add_argument(
        "--shift-trial",
        type=int,
        default=50,
        help="trial after which the rule shifts, for the vertical marker (default 50)",
    )
    args = parser.parse_args(argv)
    spec = FigureSpec(
        in_dir=Path(args.in_dir), out_dir=Path(args.out_dir), shift_trial=args.shift_trial
    )
    try:
        curves_path = plot_curves(spec)
        bars_path = plot_jumpstart(spec)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {curves_path} and {bars_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
