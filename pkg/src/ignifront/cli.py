"""Command-line entry point: ``front run|validate|suite <config>``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import ConfigError, parse_config_file
from .experiments import run_experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="front",
        description="Ignition-front experiments in 1D random media",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run the experiment configured in FILE"),
        ("validate", "parse and validate FILE, then exit"),
        ("suite", "run the invariant suite with FILE's family and grid"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", metavar="FILE", help="plain-text config file")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config_file(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(f"ok: experiment={cfg.experiment} hash={cfg.content_hash[:12]}")
        return 0
    if args.command == "suite":
        cfg = replace(cfg, values={**cfg.values, "experiment": "invariant-suite"})
    status = run_experiment(cfg, out_dir=args.out)
    print(("PASS" if status == 0 else "FAIL") + f": results in {args.out or cfg.dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
