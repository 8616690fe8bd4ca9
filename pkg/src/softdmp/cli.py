"""Command-line entry point: ``softdmp run|preset|list-presets``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .planner import ConvergenceError
from .runner import OUTPUT_ENV_VAR, list_presets, run_experiment, run_preset


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softdmp",
        description="Tabular soft reward-punishment RL experiments.",
        epilog=f"Outputs go under ${OUTPUT_ENV_VAR} (default ./results) unless --out is given.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--workers", type=int, default=1, help="parallel seed workers")

    p_pre = sub.add_parser("preset", help="run a shipped preset")
    p_pre.add_argument("name")
    p_pre.add_argument("--seed-override", type=int, nargs="+", metavar="SEED",
                       help="replace the preset's seeds")
    p_pre.add_argument("--episodes", type=int, help="override the episode count of every run")
    p_pre.add_argument("--max-steps", type=int, help="override the per-episode step cap of every run")
    p_pre.add_argument("--out", help="output directory")
    p_pre.add_argument("--workers", type=int, default=1, help="parallel seed workers")

    sub.add_parser("list-presets", help="list shipped presets")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list-presets":
            for name, desc in list_presets().items():
                print(f"{name:24s} {desc}")
        elif args.command == "run":
            outcome = run_experiment(load_config(args.config), args.out, args.workers)
            print(outcome.out_dir)
        else:
            overrides = {k: v for k, v in (("episodes", args.episodes), ("max_steps", args.max_steps))
                         if v is not None}
            outcomes = run_preset(args.name, args.out, args.seed_override, overrides, args.workers)
            for outcome in outcomes.values():
                print(outcome.out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
