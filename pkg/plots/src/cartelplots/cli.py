"""Plot CLI: `cartelsim-plot <kind> --in <csv...> --out <image>`."""

from __future__ import annotations

import argparse
import sys

from .readers import CsvError
from .render import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cartelsim-plot", description=__doc__)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image (png/svg)")
    parser.add_argument("--x-scale", choices=("linear", "log"), default=None)
    parser.add_argument("--y-scale", choices=("linear", "log"), default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = FigureSpec(kind=args.kind, inputs=args.inputs, output=args.out,
                          x_scale=args.x_scale, y_scale=args.y_scale)
        render(spec)
        return 0
    except (CsvError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())
