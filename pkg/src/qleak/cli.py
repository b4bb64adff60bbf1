"""Command line front end: run, sweep, validate.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from typing import Any, List, Optional, Tuple

from .config import ConfigError, parse_config
from .runner import (RunError, run_experiment, run_sweep, worker_count,
                     write_csv, write_sweep)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qleak",
        description="Run leakage-control experiments from a config file.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment and emit CSV")
    run_p.add_argument("--config", required=True, help="config file path")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override ensemble.master_seed")
    run_p.add_argument("--out", default=None,
                       help="CSV path (default: output.path, else stdout)")

    sweep_p = sub.add_parser("sweep", help="run a parameter sweep")
    sweep_p.add_argument("--config", required=True, help="config file path")
    sweep_p.add_argument("--set", action="append", required=True,
                         metavar="KEY=V1,V2,...", dest="assignments",
                         help="dotted key path and comma separated values; "
                              "repeat for a Cartesian product")
    sweep_p.add_argument("--out", default=None,
                         help="output directory (default: sweep_out)")

    val_p = sub.add_parser("validate", help="check a config and exit")
    val_p.add_argument("--config", required=True, help="config file path")
    return parser


def _load_config(path: str):
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config ({exc})"])
    return parse_config(text)


def _parse_value(token: str) -> Any:
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def _parse_assignments(raw: List[str]) -> List[Tuple[str, List[Any]]]:
    sweep = []
    for item in raw:
        key, sep, values = item.partition("=")
        if not sep or not key or not values:
            raise ConfigError(
                [f"--set {item!r}: expected KEY=V1,V2,..."])
        sweep.append((key, [_parse_value(v) for v in values.split(",")]))
    return sweep


def _fail_config(exc: ConfigError) -> int:
    for line in exc.violations:
        print(f"config error: {line}", file=sys.stderr)
    return EXIT_CONFIG


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        workers = worker_count()
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        cfg = _load_config(args.config)
    except ConfigError as exc:
        return _fail_config(exc)

    if args.command == "validate":
        obs = ", ".join(cfg.output["observables"])
        print(f"ok: {cfg.model['type']} over "
              f"[{cfg.solver['t_start']:g}, {cfg.solver['t_end']:g}] "
              f"dt={cfg.solver['dt']:g}; observables: {obs}")
        return EXIT_OK

    if args.command == "run":
        if args.seed is not None:
            if args.seed < 0:
                print("config error: --seed must be >= 0", file=sys.stderr)
                return EXIT_CONFIG
            cfg = cfg.replace_value("ensemble.master_seed", args.seed)
        try:
            result = run_experiment(cfg, workers=workers)
        except RunError as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        out = args.out if args.out is not None else cfg.output["path"]
        if out:
            write_csv(result, out)
            print(f"wrote {out} ({result.times.size} rows, "
                  f"{result.meta['wall_time_s']:.2f}s)", file=sys.stderr)
        else:
            write_csv(result, sys.stdout)
        return EXIT_OK

    # sweep
    try:
        sweep = _parse_assignments(args.assignments)
    except ConfigError as exc:
        return _fail_config(exc)
    try:
        results = run_sweep(cfg, sweep, workers=workers)
    except ConfigError as exc:
        return _fail_config(exc)
    except (RunError, KeyError) as exc:
        kind = "config error" if isinstance(exc, KeyError) \
            else "numerical failure"
        print(f"{kind}: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, KeyError) else EXIT_NUMERICAL
    out_dir = args.out if args.out is not None else "sweep_out"
    paths = write_sweep(results, out_dir)
    print(f"wrote {len(paths) - 1} cells and summary under {out_dir}",
          file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
