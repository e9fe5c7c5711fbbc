"""Command-line entry point: ``alignlimit {simulate,sweep,check,reference}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .harness import (
    EXIT_USAGE,
    ConfigError,
    RunConfig,
    cmd_check,
    cmd_reference,
    cmd_simulate,
    cmd_sweep,
    read_config_file,
)

# flag dest -> config key
FLAG_KEYS = {
    "eps": "eps", "lam": "lambda", "nx": "nx", "ppc": "ppc", "quad": "quad",
    "tfinal": "tfinal", "cfl": "cfl", "out": "out", "eps_list": "eps_list",
    "snapshot_times": "snapshot_times", "profile": "profile",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--eps", help="alignment time scale")
    common.add_argument("--lambda", dest="lam", help="friction coefficient")
    common.add_argument("--nx", help="number of cells")
    common.add_argument("--ppc", help="sample positions per cell")
    common.add_argument("--quad", help="velocity quadrature order (3 or 5)")
    common.add_argument("--tfinal", help="final time (default: half the frictionless blowup time)")
    common.add_argument("--cfl", help="CFL number in (0, 1]")
    common.add_argument("--out", help="output directory")
    common.add_argument("--eps-list", dest="eps_list", help="comma-separated eps values for sweep")
    common.add_argument("--snapshot-times", dest="snapshot_times",
                        help="comma-separated snapshot / reference dump times")
    common.add_argument("--profile", help="initial profile: sine or const")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="alignlimit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one kinetic simulation")
    sub.add_parser("sweep", parents=[common], help="eps sweep with rate fits")
    check = sub.add_parser("check", parents=[common], help="run the property check suite")
    check.add_argument("--fault", action="append", default=[], help=argparse.SUPPRESS)
    sub.add_parser("reference", parents=[common], help="dump the fluid reference solution")
    return parser


def load_config(args) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for dest, key in FLAG_KEYS.items():
        val = getattr(args, dest)
        if val is not None:
            values[key] = val
    return RunConfig.from_mapping(values)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "simulate":
        return cmd_simulate(config)
    if args.command == "sweep":
        return cmd_sweep(config)
    if args.command == "check":
        return cmd_check(config, faults={f.replace("-", "_") for f in args.fault})
    return cmd_reference(config)


if __name__ == "__main__":
    sys.exit(main())
