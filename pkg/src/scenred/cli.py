"""``scenred`` command line.

Exit codes: 0 success, 1 config error, 2 data error, 3 solver failure,
4 verification failure. The solver backend can be chosen with the
``SCENRED_SOLVER`` environment variable (``highs`` or ``scipy``).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline, verify
from .config import PipelineConfig, VerifySettings, load_config, parse_config
from .data import write_atomic
from .errors import ConfigError, DataError, SolverFailure, ValidationError, VerificationFailure

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3, 4

log = logging.getLogger("scenred")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scenred", description="Scenario reduction for two-stage stochastic programs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="pipeline config.json")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--workers", type=int, help="worker threads for cost matrices and evaluation")
        p.add_argument("--seed-override", type=int, help="run this single draw seed instead of the configured list")
        p.add_argument("--gap", type=float, help="relative MILP gap (0 = exact)")
        p.add_argument("--objective-offset", type=float, help="constant added to the first-stage cost")

    common(sub.add_parser("reduce", help="cost matrices, selections and reduced distributions"))
    common(sub.add_parser("pipeline", help="full sweep over seeds, methods and m; writes results.csv"))
    pv = sub.add_parser("verify", help="run the self-check suites")
    common(pv, config_required=False)
    pv.add_argument("--inject-fault", choices=verify.FAULTS, help="deliberately corrupt the regret matrix")
    ps = sub.add_parser("stats", help="five-number RAE summary per (method, m)")
    ps.add_argument("results", help="results.csv written by the pipeline command")
    ps.add_argument("--out", help="write the summary here instead of stdout")
    return ap


def _load(args) -> PipelineConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(args.workers, args.seed_override, args.gap, args.objective_offset)


def _verify(args) -> int:
    if args.config:
        cfg = _load(args)
        settings = cfg.verify
    else:
        cfg = parse_config({"scenarios": {"synthetic": {"pool_size": 1, "seed": 0}}, "methods": ["ID"]})
        settings = VerifySettings()
    if getattr(args, "inject_fault", None):
        settings = replace(settings, fault=args.inject_fault)
    from .solver import get_backend

    results = verify.run_all(settings, get_backend(cfg.solver.backend))
    text = verify.report(results)
    write_atomic(Path(args.out) / "verify_report.txt", pipeline.header_line(cfg) + text)
    sys.stdout.write(text)
    verify.check(results)
    return EXIT_OK


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "reduce":
            doc = pipeline.run_reduce(_load(args), args.out)
            print(f"wrote {len(doc['reductions'])} reductions to {Path(args.out) / 'reduction.json'}")
        elif args.command == "pipeline":
            rows = pipeline.run_pipeline(_load(args), args.out,
                                         progress=lambda r: log.info("seed=%s %s m=%s rae=%.4g%%", r["seed"],
                                                                     r["method"], r["m"], r["rae_percent"]))
            print(f"wrote {len(rows)} rows to {Path(args.out) / 'results.csv'}")
        elif args.command == "verify":
            return _verify(args)
        elif args.command == "stats":
            text = pipeline.run_stats(args.results, args.out)
            if args.out is None:
                sys.stdout.write(text)
        return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as e:
        print(str(e), file=sys.stderr)
        return EXIT_VERIFY
    except (DataError, ValidationError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except SolverFailure as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
