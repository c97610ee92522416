"""Command line front end: weight-export OUT_DIR [--model ...] [--seed N]."""

import argparse
import sys

from .bundle import export
from .errors import ExportError


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="weight-export",
        description="Export backbone weights, a fixture image, and golden "
        "activations for cross-implementation parity checks.",
    )
    parser.add_argument("out_dir", help="directory to write the bundle into")
    parser.add_argument("--model", default="resnet50", help="zoo model id")
    parser.add_argument("--seed", type=int, default=0, help="fixture and fallback seed")
    parser.add_argument(
        "--source",
        default="auto",
        choices=("auto", "zoo", "synthetic"),
        help="weight origin policy (default: cached zoo weights, else synthetic)",
    )
    args = parser.parse_args(argv)
    try:
        bundle = export(args.model, args.out_dir, seed=args.seed, source=args.source)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for key in ("weights", "fixture", "golden", "metadata"):
        print(f"{key}: {bundle[key]}")
    print(f"weight source: {bundle['source']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
