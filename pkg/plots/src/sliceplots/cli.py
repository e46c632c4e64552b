"""plots <kind> --in CSV [--in2 CSV] --out PNG

Exit codes match the simulator's convention: 0 on success, 2 when the
request or an input CSV is unusable (unknown kind, missing file,
schema mismatch).
"""

import argparse
import os
import sys

from .io import SchemaError
from .render import KINDS, PlotJob, render

USAGE_ERROR = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plots",
        description=(
            "Render simulator CSV artifacts as figures: training "
            "curves, masked log-odds, attribution correlations."
        ),
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument(
        "--in", dest="input", required=True, metavar="CSV",
        help="input CSV artifact",
    )
    parser.add_argument(
        "--in2", dest="input2", metavar="CSV",
        help="second CSV to overlay or compare",
    )
    parser.add_argument("--out", required=True, metavar="PNG",
                        help="output image path")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    inputs = (args.input,) if args.input2 is None else (args.input,
                                                        args.input2)
    try:
        for path in inputs:
            if not os.path.exists(path):
                raise SchemaError(f"{path}: input CSV does not exist")
        job = PlotJob(kind=args.kind, inputs=inputs, out=args.out)
        out = render(job)
    except SchemaError as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return USAGE_ERROR
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
