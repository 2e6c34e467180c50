"""Command line: ``mapcsim run | replay | summarize``."""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, MatchConfig, load_config
from .runner import replay_verify, run_match, summarize_log

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mapcsim", description="Block-assembly grid world matches.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play one match and write its event log")
    run.add_argument("--config", help="match config JSON (defaults are used when omitted)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--steps", type=int, help="override the config step count")
    run.add_argument("--out", default="out", help="directory for the log and summary")
    run.add_argument("--verbosity", type=int, help="override the config log verbosity")

    replay = sub.add_parser("replay", help="re-simulate a log and compare state hashes")
    replay.add_argument("--log", required=True)

    summarize = sub.add_parser("summarize", help="rebuild the match summary from a log")
    summarize.add_argument("--log", required=True)
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else MatchConfig()
    overrides = {k: getattr(args, k) for k in ("seed", "steps", "verbosity") if getattr(args, k) is not None}
    if overrides:
        cfg = MatchConfig.from_dict({**cfg.to_dict(), **overrides})
    result = run_match(cfg, args.out)
    print(json.dumps({"log": str(result.log_path), **result.summary.to_dict()}, sort_keys=True))
    return EXIT_OK


def _cmd_replay(args) -> int:
    outcome = replay_verify(args.log)
    if outcome.ok:
        print("ok")
        return EXIT_OK
    print(f"divergence at step {outcome.step}: {outcome.reason}")
    return EXIT_DIVERGENCE


def _cmd_summarize(args) -> int:
    print(json.dumps(summarize_log(args.log).to_dict(with_timing=False), indent=2, sort_keys=True))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "replay": _cmd_replay, "summarize": _cmd_summarize}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
