"""Command-line entry point: ``freshcache run|validate|list-experiments``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from . import __version__
from .experiments import DESCRIPTIONS, ConfigError, Experiment, parse_config, run_experiment


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _cmd_run(args) -> int:
    spec = _load(args.config)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    paths = run_experiment(spec, out_dir=args.out, threads=args.threads)
    for p in paths:
        print(p, file=sys.stderr)
    return 0


def _cmd_validate(args) -> int:
    spec = _load(args.config)
    print(json.dumps(spec.resolved(), indent=2, sort_keys=True))
    return 0


def _cmd_list(args) -> int:
    for e in Experiment:
        print(f"{e.value:<20} {DESCRIPTIONS[e]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freshcache",
                                     description="Cache policies under content freshness constraints.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="output directory (default: config 'out', "
                                 "$FRESHCACHE_OUT, then ./results)")
    p.add_argument("--threads", type=int, default=1, help="parallel replications")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="parse a config and print it with defaults applied")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("list-experiments", help="list available experiments")
    p.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except ValueError as exc:
        # ConfigError, EnumerationTooLarge and model validation errors
        print(f"freshcache: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
