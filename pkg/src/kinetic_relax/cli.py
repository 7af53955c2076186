"""Command line entry point: ``kinetic-relax run|verify|abstract``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import config as cfgmod
from .experiments import run as run_experiment
from .verify import SUITES, run_suite

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def atomic_write(path: str, text: str):
    """Write via a temporary file in the same directory, then rename."""
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summary_text(cfg: dict, results: dict) -> str:
    doc = {"config": cfg, "results": results, "schema_version": cfgmod.SCHEMA_VERSION}
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _err(msg: str):
    print(f"kinetic-relax: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        cfg = cfgmod.load(args.config, args.seed, args.prefix)
    except cfgmod.ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_INVALID
    try:
        with np.errstate(over="raise", invalid="raise"):
            csv_text, results = run_experiment(cfg)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except ValueError as exc:
        _err(f"invalid input: {exc}")
        return EXIT_INVALID
    prefix = cfg["output_prefix"]
    atomic_write(f"{prefix}_trace.csv", csv_text)
    atomic_write(f"{prefix}_summary.json", summary_text(cfg, results))
    print(f"wrote {prefix}_trace.csv and {prefix}_summary.json")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite != "all" and args.suite not in SUITES:
        _err(f"unknown suite {args.suite!r}; choose from {', '.join(list(SUITES) + ['all'])}")
        return EXIT_INVALID
    checks = run_suite(args.suite, seed=args.seed, inject=args.inject)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if not failed else 1


def cmd_abstract(args) -> int:
    raw = {"schema_version": cfgmod.SCHEMA_VERSION, "model": "abstract",
           "m": args.m, "trials": args.trials}
    try:
        cfg = cfgmod.resolve(raw, args.seed, args.prefix)
    except cfgmod.ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_INVALID
    csv_text, results = run_experiment(cfg)
    print(json.dumps(results, sort_keys=True, indent=2))
    if args.prefix:
        atomic_write(f"{args.prefix}_trace.csv", csv_text)
        atomic_write(f"{args.prefix}_summary.json", summary_text(cfg, results))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kinetic-relax",
                                description="Kinetic relaxation experiments and invariant checks.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config", help="path to the JSON config")
    r.add_argument("--prefix", help="output path prefix (overrides output_prefix)")
    r.add_argument("--seed", type=int, help="random seed (overrides seed)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("suite", help=f"one of {', '.join(list(SUITES) + ['all'])}")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject", choices=["nonskew-A"], help="inject a known fault (negative test)")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("abstract", help="randomized sweep over damped/free operator pairs")
    a.add_argument("--m", type=int, default=6)
    a.add_argument("--trials", type=int, default=20)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--prefix")
    a.set_defaults(func=cmd_abstract)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
