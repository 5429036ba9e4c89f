"""Command-line front end: scenario runs and cross-validation reports.

    contourdyn run --config scenario.toml [--out DIR] [--jobs N] [--threads N]
    contourdyn compare --a DIR_A --b DIR_B [--out FILE]

Exit codes: 0 success, 2 configuration error, 3 simulation halt (diagnostics
are still written), 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="contourdyn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one or more scenario configs")
    run_p.add_argument("--config", action="append", required=True,
                       help="TOML scenario file (repeatable)")
    run_p.add_argument("--out", default=None, help="output directory (single config only)")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="process pool size for independent scenarios")
    run_p.add_argument("--threads", type=int, default=1,
                       help="BLAS/OpenMP threads per process (reproducible default: 1)")

    cmp_p = sub.add_parser("compare", help="cross-validate two output directories")
    cmp_p.add_argument("--a", required=True)
    cmp_p.add_argument("--b", required=True)
    cmp_p.add_argument("--out", default=None, help="write the report JSON here")

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_compare(args)


def _set_threads(n: int):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def _run_one(path, out_dir, threads):
    _set_threads(threads)
    from .config import ConfigError, load_config
    from .runner import SimulationHalt, run_scenario

    try:
        config = load_config(path)
    except ConfigError as exc:
        return (path, 2, {"status": "config-error", "error": str(exc)})
    try:
        summary = run_scenario(config, out_dir)
        return (path, 0, summary)
    except SimulationHalt as exc:
        return (path, 3, {"status": "halted", "error": str(exc)})


def _cmd_run(args) -> int:
    _set_threads(args.threads)
    if args.out is not None and len(args.config) > 1:
        print(json.dumps({"error": "--out is only valid with a single --config"}))
        return 2
    results = []
    if args.jobs > 1 and len(args.config) > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futs = [
                pool.submit(_run_one, path, None, args.threads) for path in args.config
            ]
            results = [f.result() for f in futs]
    else:
        for path in args.config:
            results.append(_run_one(path, args.out, args.threads))
    worst = 0
    for path, code, summary in results:
        line = {"config": str(path), "exit": code}
        line.update({k: v for k, v in summary.items() if k in ("status", "error", "kind", "t_end")})
        print(json.dumps(line, sort_keys=True))
        worst = max(worst, code)
    return worst


def _cmd_compare(args) -> int:
    from .config import ConfigError
    from .runner import compare_runs

    try:
        summary = compare_runs(args.a, args.b, args.out)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc)}))
        return 2
    print(json.dumps({k: summary[k] for k in ("pairs", "hausdorff_max")}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
