"""Command line entry point: swinglab-plots <csv-dir> <out-dir>."""

import argparse
import sys

from .render import render_all


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="swinglab-plots",
        description="Render figures from a swinglab sweep output directory.",
    )
    parser.add_argument(
        "csv_dir", help="directory containing sweep.csv, dist.csv and summary.csv"
    )
    parser.add_argument("out_dir", help="directory to write PNG figures into")
    args = parser.parse_args(argv)
    try:
        paths = render_all(args.csv_dir, args.out_dir)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
