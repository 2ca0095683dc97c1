"""Command-line experiment runner.

Exit codes: 0 success, 2 configuration error, 3 simulation timeout,
4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import validate_config
from .errors import ConfigError, InvalidInputError, SimulationTimeout
from .experiments import run_experiment

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_TIMEOUT = 3
EXIT_IO_ERROR = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinsim",
        description="Run a simulator experiment described by a TOML config file.")
    parser.add_argument("--config", required=True, help="path to the experiment config")
    parser.add_argument("--out", default=None, help="override the configured output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="replace the configured seed list with a single seed")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config, diagnostics = validate_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR
    if config is None:
        for diag in diagnostics:
            print(f"{args.config}:{diag}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.out is not None:
        config = dataclasses.replace(config, output_dir=args.out)
    if args.seed is not None:
        config = dataclasses.replace(config, seeds=(args.seed,))
    try:
        paths = run_experiment(config)
    except SimulationTimeout as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except (ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR
    if not args.quiet:
        for path in paths:
            print(f"wrote {path}")
    return EXIT_OK


def run():
    raise SystemExit(main())


if __name__ == "__main__":
    run()
