"""Command-line entry point: ``adamas {sweep,needle,cost,selftest}``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cost_model import METHODS, CostParams, cost_summary
from .errors import ConfigError, CostModelError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

log = logging.getLogger("adamas")


def _cmd_sweep(args) -> int:
    from .harness import emit, load_config, run_sweeps

    specs, sweep = load_config(args.config)
    rows = run_sweeps(specs, sweep)
    emit(rows, args.format, args.out)
    log.info("wrote %d rows to %s", len(rows), args.out)
    return EXIT_OK


def _cmd_needle(args) -> int:
    from .harness import load_config, needle_report, run_sweeps
    from .harness.config import PlantedNeedle
    from .harness.report import needle_table, needle_to_csv

    specs, sweep = load_config(args.config)
    if not all(isinstance(s.distribution, PlantedNeedle) for s in specs):
        raise ConfigError("needle requires a planted_needle workload distribution")
    summary = needle_report(run_sweeps(specs, sweep))
    Path(args.out).write_text(needle_to_csv(summary), encoding="utf-8")
    print(needle_table(summary))
    return EXIT_OK


def _cmd_cost(args) -> int:
    try:
        params = CostParams(b=args.b, s=args.s, h=args.h, h_kv=args.hkv, d=args.d, n=args.n, p=args.p, k=args.k)
        report = cost_summary(args.method, params)
    except CostModelError as exc:
        raise ConfigError(str(exc)) from None
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from . import selftest

    return EXIT_OK if selftest.run(args.seed) else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adamas", description="Adamas sparse-attention selection benchmarks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a policy x budget sweep and write CSV/JSON rows")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("needle", help="planted-needle retrieval summary per policy and budget")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_needle)

    p = sub.add_parser("cost", help="print the analytic FLOP/memory report as JSON")
    p.add_argument("--method", choices=METHODS, required=True)
    defaults = CostParams()
    for name, dest in (("b", "b"), ("s", "s"), ("h", "h"), ("hkv", "hkv"), ("d", "d"), ("n", "n"), ("p", "p"), ("k", "k")):
        attr = "h_kv" if dest == "hkv" else dest
        p.add_argument(f"--{name}", dest=dest, type=int, default=getattr(defaults, attr))
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("selftest", help="run the oracle-equivalence checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are configuration errors here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
