"""Command line: endofig render --figure figN --in DIR [--in DIR2] --out PATH."""
from __future__ import annotations

import argparse
import sys

from .recipes import RECIPES, RecipeError
from .render import render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="endofig",
                                description="Render figures from simulator artifacts")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("render", help="render one figure from run directories")
    pr.add_argument("--figure", required=True, choices=sorted(RECIPES))
    pr.add_argument("--in", dest="in_dirs", action="append", required=True,
                    metavar="DIR", help="input run directory (repeatable)")
    pr.add_argument("--out", required=True, help="output image path")

    sub.add_parser("list", help="list figure ids and what they read")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for fid, recipe in sorted(RECIPES.items()):
            print(f"{fid}  reads {', '.join(recipe.inputs)}  - {recipe.description}")
        return 0
    try:
        render(args.figure, args.in_dirs, args.out)
    except RecipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
