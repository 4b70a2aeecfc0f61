"""Command-line wrapper: ``figures curves`` and ``figures bars``.

Exit codes: 0 success (warnings allowed, reported on stderr), 1 when inputs
are missing or unusable, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .plots import plot_curves, plot_response_bars


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from rewire-ipd aggregate CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)

    curves = sub.add_parser("curves",
                            help="per-condition learning-curve grid")
    curves.add_argument("--in", dest="input", type=Path, required=True,
                        help="aggregate_curves.csv from the analyze stage")
    curves.add_argument("--out", type=Path, required=True,
                        help="output image (.svg/.pdf/.png by extension)")
    curves.add_argument("--smoothing", type=int, default=1,
                        help="moving-average window in bins (default off)")

    bars = sub.add_parser("bars", help="stacked rewiring-response bars")
    bars.add_argument("--in", dest="input", type=Path, required=True,
                      help="aggregate_response.csv from the analyze stage")
    bars.add_argument("--out", type=Path, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "curves":
            warnings = plot_curves(args.input, args.out,
                                   smoothing=args.smoothing)
        else:
            warnings = plot_response_bars(args.input, args.out)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if warnings:
        print(f"{args.out}: rendered with {warnings} empty panel(s)",
              file=sys.stderr)
    else:
        print(f"{args.out}: rendered", file=sys.stderr)
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
