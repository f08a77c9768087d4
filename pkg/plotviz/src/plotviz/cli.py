"""`plot curves` and `plot bars`: render experiment outputs to PNG or SVG."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import charts, io


def cmd_curves(args) -> int:
    labels = args.labels or [Path(p).stem for p in args.inputs]
    if len(labels) != len(args.inputs):
        raise ValueError(f"{len(args.inputs)} inputs but {len(labels)} labels")
    tables = {label: io.read_metrics(path) for label, path in zip(labels, args.inputs)}
    charts.learning_curve(tables, args.out, window=args.window,
                          mark_switch=not args.no_switch_marker)
    print(f"wrote {args.out}")
    return 0


def cmd_bars(args) -> int:
    charts.bar_chart(io.read_summary(args.summary), args.out)
    print(f"wrote {args.out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render windy-hallway experiment figures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="learning curves with shaded 95% bands")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   metavar="CSV", help="metrics CSVs, one per algorithm")
    p.add_argument("--labels", nargs="+", help="legend labels (default: file stems)")
    p.add_argument("--window", type=int, default=600, help="episodes to show")
    p.add_argument("--no-switch-marker", action="store_true")
    p.add_argument("--out", type=Path, required=True, help="output image (.png or .svg)")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("bars", help="average-MSE bar chart with error bars")
    p.add_argument("--summary", type=Path, required=True, help="summary JSON")
    p.add_argument("--out", type=Path, required=True, help="output image (.png or .svg)")
    p.set_defaults(func=cmd_bars)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
