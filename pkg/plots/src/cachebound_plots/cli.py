"""`plots <figure-kind> --in <csvs...> --out <image>`.

Figure kinds and their --in arguments, in order:

  boundary   frontier.csv phases.csv [boundary.csv]
  heatmap    heatmap.csv dataset.csv

Exit codes: 2 for missing/schema-mismatched inputs, 0 on success.
"""

from __future__ import annotations

import argparse
import sys

from .render import DPI_DEFAULT, SchemaError, render_boundary, render_heatmap


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from cachebound CSV artifacts")
    parser.add_argument("kind", choices=("boundary", "heatmap"))
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSVs (order per figure kind)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--dpi", type=int, default=DPI_DEFAULT)
    args = parser.parse_args(argv)

    try:
        if args.kind == "boundary":
            if not 2 <= len(args.inputs) <= 3:
                parser.error("boundary needs --in FRONTIER PHASES [BOUNDARY]")
            records = args.inputs[2] if len(args.inputs) == 3 else None
            render_boundary(args.inputs[0], args.inputs[1], args.out,
                            records_csv=records, dpi=args.dpi)
        else:
            if len(args.inputs) != 2:
                parser.error("heatmap needs --in HEATMAP DATASET")
            render_heatmap(args.inputs[0], args.inputs[1], args.out, dpi=args.dpi)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
