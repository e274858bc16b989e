"""Command-line interface.

Subcommands: run (full experiment campaign), estimate-jx (period-based
coupling estimation), stats (coupling statistics table only), and
validate-config. Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ExperimentConfig
from .errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_OVERRIDE_FIELDS = {
    "n_bath": int,
    "seed": int,
    "realizations": int,
    "stats_realizations": int,
    "n_cut": int,
    "n_grid": int,
    "workers": int,
    "b0z": float,
    "delta": float,
    "lambda_max": float,
    "kT": float,
    "dt": float,
    "t_final_short": float,
    "t_final_long": float,
    "p": float,
    "q": float,
    "tau_b": float,
    "estimation_dt": float,
    "backend": str,
    "estimation_engine": str,
    "figure_format": str,
}


def _add_override_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file")
    for name, kind in _OVERRIDE_FIELDS.items():
        parser.add_argument(f"--{name.replace('_', '-')}", type=kind, default=None)
    parser.add_argument("--jx-list", type=str, default=None,
                        help="comma-separated coupling bounds, e.g. 0,0.15,0.5")
    parser.add_argument("--engines", type=str, default=None,
                        help="comma-separated subset of exact,nmme,markovian")


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for name in _OVERRIDE_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if args.jx_list is not None:
        try:
            overrides["jx_list"] = tuple(float(x) for x in args.jx_list.split(","))
        except ValueError:
            raise ConfigError(f"cannot parse --jx-list {args.jx_list!r}")
    if getattr(args, "engines", None) is not None:
        overrides["engines"] = tuple(e.strip() for e in args.engines.split(","))
    return config.override(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinprobe",
        description="Central-spin detector in a self-interacting spin bath: "
                    "exact and master-equation dynamics, coupling estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured experiment campaign")
    _add_override_args(p_run)
    p_run.add_argument("--out", type=Path, required=True, help="output directory")

    p_est = sub.add_parser("estimate-jx", help="estimate the intra-bath coupling")
    _add_override_args(p_est)
    p_est.add_argument("--out", type=Path, required=True)
    p_est.add_argument("--target-jx", type=float, required=True)

    p_stats = sub.add_parser("stats", help="write the coupling statistics table")
    _add_override_args(p_stats)
    p_stats.add_argument("--out", type=Path, required=True, help="output CSV path")

    p_val = sub.add_parser("validate-config", help="check a config file")
    p_val.add_argument("--config", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate-config":
            config = ExperimentConfig.from_file(args.config)
            print(f"config ok: {args.config}")
            return EXIT_OK

        config = _build_config(args)

        if args.command == "run":
            from .runner import run_experiment

            out = run_experiment(config, args.out)
            print(f"experiment written to {out}")
            return EXIT_OK

        if args.command == "estimate-jx":
            from .runner import run_jx_estimation

            report = run_jx_estimation(config, args.target_jx, args.out)
            print(json.dumps(report.to_dict(), indent=2))
            return EXIT_OK

        if args.command == "stats":
            from .runner import statistics_table, write_stats_csv

            table = statistics_table(config, config.stats_realizations or config.realizations)
            write_stats_csv(Path(args.out), table)
            print(f"statistics written to {args.out}")
            return EXIT_OK

        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
