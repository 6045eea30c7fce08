"""Command-line front end: BER sweeps, the complexity table, and a selftest.

``otfs-sim run --config cfg.json --out results/`` runs a sweep and writes
CSV results (plus a metadata sidecar); ``otfs-sim complexity --config
cx.json`` evaluates the complex-multiplication counts; ``otfs-sim
selftest`` replays the built-in oracle checks.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalError
from .harness import (
    ComplexityParams,
    SimConfig,
    complexity_report,
    export_diagnostics,
    export_results,
    run_ber_sweep,
)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = SimConfig.from_json(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, diag = run_ber_sweep(cfg, collect_diagnostics=args.diagnostics, progress=True)
    csv_path = export_results(records, out_dir / "results.csv", config=cfg)
    print(f"wrote {csv_path}")
    if args.diagnostics and diag:
        diag_path = export_diagnostics(diag, out_dir / "diagnostics.csv")
        print(f"wrote {diag_path}")
    return 0


def _cmd_complexity(args: argparse.Namespace) -> int:
    raw = json.loads(Path(args.config).read_text()) if args.config else {}
    known = set(ComplexityParams.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unknown complexity keys: {sorted(unknown)}")
    params = ComplexityParams(**raw)
    report = complexity_report(params)
    print(f"parameters: {params}")
    print(f"{'method':<12} {'complex multiplications':>24}")
    for method, cms in report.items():
        print(f"{method:<12} {cms:>24.4e}")
    base = report["tte-sic"]
    print(f"{'ratio vs tte-sic:':<12}")
    for method, cms in report.items():
        if method != "tte-sic":
            print(f"  {method:<12} {cms / base:>10.1f}x")
    return 0


def _cmd_selftest(_args: argparse.Namespace) -> int:
    from . import selftest

    return selftest.run()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="otfs-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a Monte-Carlo BER sweep")
    p_run.add_argument("--config", required=True, help="JSON simulation config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--diagnostics", action="store_true",
                       help="also write per-iteration diagnostics")
    p_run.set_defaults(func=_cmd_run)

    p_cx = sub.add_parser("complexity", help="evaluate the complexity table")
    p_cx.add_argument("--config", help="JSON with complexity parameters (optional)")
    p_cx.set_defaults(func=_cmd_complexity)

    p_st = sub.add_parser("selftest", help="run the built-in oracle checks")
    p_st.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
