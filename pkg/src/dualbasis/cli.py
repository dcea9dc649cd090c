"""Command-line front end.

Exit status: 0 on success, 2 on a configuration error, 1 on a runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as config_mod
from . import harness
from .config import ConfigError

COMMANDS = ("povm", "calibrate", "witness", "montecarlo", "compare", "sweep", "run", "verify")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dualbasis", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="TOML experiment description")
    ap.add_argument("--seed", type=int, help="override run.seed")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    ap.add_argument("--replicates", type=int, help="override run.replicates")
    ap.add_argument("--workers", type=int, default=1, help="parallel tasks (does not change results)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "verify":
        problems = harness.verify(args.out)
        for p in problems:
            print(p, file=sys.stderr)
        if not problems:
            print(f"{args.out}: ok")
        return 1 if problems else 0

    try:
        cfg = config_mod.load(args.config) if args.config else config_mod.ExperimentConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.replicates is not None:
            cfg.replicates = args.replicates
        cfg.validate()
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    w = harness.Writer(args.out, cfg)
    try:
        if args.command == "povm":
            harness.povm_outputs(cfg, w)
        elif args.command == "calibrate":
            harness.calibration_outputs(cfg, w)
        elif args.command == "witness":
            harness.witness_outputs(cfg, w)
        elif args.command == "montecarlo":
            harness.montecarlo_outputs(cfg, w)
        elif args.command == "compare":
            harness.compare_outputs(cfg, w, args.workers)
        elif args.command == "sweep":
            harness.sweep_outputs(cfg, w, args.workers)
        elif args.command == "run":
            harness.povm_outputs(cfg, w)
            harness.montecarlo_outputs(cfg, w)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    w.manifest(args.command)
    return 0


if __name__ == "__main__":
    sys.exit(main())
