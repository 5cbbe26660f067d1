"""Command-line entry point: one subcommand per experiment kind."""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .config import KINDS, ConfigError, parse_config
from .field import BudgetError
from .runner import timed_run

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lsl-lab", description=__doc__)
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", type=Path, help="JSON config file; defaults are used when omitted")
        p.add_argument("--seed", type=int, help="overrides the seed in the config")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = {}
        if args.config is not None:

            try:
                doc = json.loads(args.config.read_text())
            except json.JSONDecodeError as e:
                raise ConfigError(f"malformed config: {e}") from e
            except OSError as e:
                raise ConfigError(f"cannot read config: {e}") from e
        if args.seed is not None:
            if isinstance(doc, dict):
                doc["seed"] = args.seed
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = parse_config(doc, args.kind)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        res, manifest = timed_run(cfg, args.out, args.threads)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_BUDGET
    for name, c in manifest["checks"].items():
        tag = "PASS" if c["passed"] else ("FAIL" if c["hard"] else "warn")
        print(f"{tag} {name}")
    if res.failed_hard:
        return EXIT_CHECK_FAILED
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
