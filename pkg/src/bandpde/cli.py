"""Command line driver.

``bandpde run <config>`` executes one experiment described by a flat
key=value file and writes one CSV per result table; ``bandpde list``
prints the catalogue.  Heavy imports happen after argument handling so
``--threads`` can cap the linear-algebra thread pools in time.
"""
from __future__ import annotations

import argparse
import os
import sys

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS",
                "VECLIB_MAXIMUM_THREADS")


def _cap_threads(n: int) -> None:
    for var in _THREAD_VARS:
        os.environ[var] = str(n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandpde",
        description="narrowband PDE experiments on closed surfaces")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("config", help="path to a key=value config file")
    run_p.add_argument("--out", default=None,
                       help="output directory (default: config file stem)")
    run_p.add_argument("--seed", type=int, default=None,
                       help="seed for randomized studies (default 0)")
    run_p.add_argument("--threads", type=int, default=None,
                       help="cap the linear-algebra thread pools")
    sub.add_parser("list", help="list available experiments and fields")
    return parser


def _cell(value) -> str:
    if hasattr(value, "item"):      # numpy scalar
        value = value.item()
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return "%d" % value
    if isinstance(value, float):
        return "%.12e" % value
    return str(value)


def write_csv(path: str, table) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(str(c) for c in table.header) + "\n")
        for row in table.rows:
            fh.write(",".join(_cell(c) for c in row) + "\n")


def _cmd_list() -> int:
    from .experiments import EXPERIMENTS
    for exp in EXPERIMENTS.values():
        print(f"{exp.name}: {exp.summary}")
        for f in exp.fields:
            state = "required" if f.default is None else f"default {f.default}"
            print(f"    {f.name} ({state}): {f.help}")
    return 0


def _cmd_run(args) -> int:
    if args.threads is not None:
        _cap_threads(args.threads)
    from .errors import ConfigError
    from .experiments import parse_config_text, validate_config
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        raw = parse_config_text(text)
        exp, params = validate_config(raw)
        if args.seed is not None:
            seed = args.seed
        else:
            seed = int(raw.get("seed", "0"))
        tables = exp.run(params, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    stem = os.path.splitext(os.path.basename(args.config))[0]
    out = args.out or raw.get("out") or stem
    os.makedirs(out, exist_ok=True)
    for table in tables:
        path = os.path.join(out, table.name + ".csv")
        write_csv(path, table)
        print(f"wrote {path} ({len(table.rows)} rows)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return _cmd_list()
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
