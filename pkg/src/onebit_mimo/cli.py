"""Command-line front end for the experiment harness."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, default_config, parse_config
from .harness import nmse_csv_rows, run_nmse_experiment, run_rate_experiment, run_theory, write_csv

_COMMANDS = {
    "nmse": "Monte-Carlo channel estimation error",
    "rate": "Monte-Carlo zero-forcing sum rate",
    "theory": "closed-form NMSE recursion and fixed point",
    "validate-config": "check a config file and exit",
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="onebit-mimo",
        description="Uplink channel estimation experiments for massive MIMO with one-bit ADCs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="experiment config file")
        cmd.add_argument("--seed", type=int, help="override the root seed")
        cmd.add_argument("--trials", type=int, help="override the trial count")
        cmd.add_argument("--out", help="CSV output path (default stdout)")
        cmd.add_argument(
            "--profile",
            choices=("fast", "paper"),
            default="fast",
            help="default parameter set merged under the config file",
        )
    return parser


def _build_config(args):
    base = default_config(profile=args.profile)
    overrides = {}
    if args.command != "validate-config":
        overrides["mode"] = args.command
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    return parse_config(text, base=base, overrides=overrides)


def _error_line(kind, **payload):
    print(json.dumps({"error": kind, **payload}), file=sys.stderr)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
    except ConfigError as err:
        _error_line(
            "config",
            issues=[{"line": ln, "key": key, "message": msg} for ln, key, msg in err.issues],
        )
        return 2
    except OSError as err:
        _error_line("io", message=str(err))
        return 2

    if args.command == "validate-config":
        print("config ok")
        return 0

    try:
        if args.command == "nmse":
            rows = nmse_csv_rows(run_nmse_experiment(cfg), cfg)
        elif args.command == "rate":
            rows = run_rate_experiment(cfg)
        else:
            rows = run_theory(cfg)
        write_csv(rows, args.out)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as err:
        _error_line("runtime", message=str(err))
        return 1
    except OSError as err:
        _error_line("io", message=str(err))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
