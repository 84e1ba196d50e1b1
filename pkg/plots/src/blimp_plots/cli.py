"""Command-line entry point: render figures from spec files."""

from __future__ import annotations

import argparse
import sys

from .figspec import FigureSpecError, load_figure_spec
from .render import render
from .schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blimp-plots",
        description="Render publication-style figures from run CSVs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser(
        "render", help="render the figure described by a YAML spec"
    )
    p_render.add_argument(
        "--spec",
        required=True,
        action="append",
        metavar="PATH",
        help="figure spec file (repeatable)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        for spec_path in args.spec:
            spec = load_figure_spec(spec_path)
            for path in render(spec):
                print(path)
    except (FigureSpecError, SchemaError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
