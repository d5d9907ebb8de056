"""Command-line entry point.

Usage: ``mpemba <command> --config <path> [--jobs N] [--out DIR]``.
All progress goes to standard error; result files land in the output
directory together with ``manifest.json``.  Exit codes: 0 success,
2 validation failure, 3 resource limit, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import COMMANDS, parse_config
from .errors import NumericalError, ResourceError, ValidationError
from .runner import run_command


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpemba",
        description="Dissipative spin-chain heating dynamics and relaxation-anomaly analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to a key-value config file")
        cmd.add_argument("--jobs", type=int, default=1, help="worker processes for sweep points")
        cmd.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as handle:
            config = parse_config(handle.read())
        run_command(args.command, config, out_dir=args.out, jobs=args.jobs)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
