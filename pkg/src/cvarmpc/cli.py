"""Command-line interface: run campaigns, describe systems, recompute statistics.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_config
from .harness import describe, run_campaign, stats

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvarmpc",
        description="Risk-sensitive sampling-based MPC: CVaR optimization campaigns",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a seeded experiment campaign from a config file")
    run_p.add_argument("config", help="path to a YAML/JSON experiment config")

    desc_p = sub.add_parser("describe", help="print a system's shipped defaults")
    desc_p.add_argument("system", help="pendulum, cartpole or quadcopter")

    stats_p = sub.add_parser("stats", help="Mean/VaR/CVaR of a cost CSV (one value per line)")
    stats_p.add_argument("csv", help="path to the cost list")
    stats_p.add_argument("--gamma", type=float, default=0.9, help="risk level in (0, 1)")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            run_campaign(config)
            return EXIT_OK
        if args.command == "describe":
            try:
                print(describe(args.system))
            except KeyError as exc:
                print(f"config error: system: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            return EXIT_OK
        if args.command == "stats":
            if not 0.0 < args.gamma < 1.0:
                print("config error: gamma: must lie in (0, 1)", file=sys.stderr)
                return EXIT_CONFIG
            summary = stats(args.csv, args.gamma)
            payload = {
                "gamma": args.gamma,
                "mean": summary.mean,
                "var": summary.var_hat,
                "cvar": summary.cvar_hat,
            }
            print(json.dumps(payload, indent=2))
            return EXIT_OK
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
