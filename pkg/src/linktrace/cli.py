"""Command line: run simulation studies and estimate from survey files.

Exit status is 0 on success and 2 on any validation problem (bad
arguments, malformed files, infeasible settings).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .api import RaoBlackwellEstimator
from .reorder import EnumerationLimitError
from .sampling import read_observed
from .study import PRESETS, StudyConfig, run_study


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linktrace",
        description="Link-traced sampling designs: simulate studies or estimate "
                    "population quantities from observed samples.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a replicated simulation study")
    source = sim.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="key=value study configuration file")
    source.add_argument("--preset", choices=sorted(PRESETS),
                        help="built-in study configuration")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--replications", type=int, help="override replication count")
    sim.add_argument("--iterations", type=int, help="override chain length")
    sim.add_argument("--seed", type=int, help="override master seed")
    sim.add_argument("--jobs", type=int, help="parallel workers (-1 = all cores)")
    sim.add_argument("--trace", action="store_true",
                     help="write per-replication chain traces under <out>/trace")

    est = sub.add_parser("estimate", help="estimate from a serialized survey")
    est.add_argument("--d0", required=True, help="observed-data file")
    est.add_argument("--statistic", default=None,
                     help="comma list of estimators (default depends on the "
                          "number of samples)")
    est.add_argument("--method", default="auto", choices=("auto", "exact", "mcmc"))
    est.add_argument("--iterations", type=int, default=20000)
    est.add_argument("--level", type=float, default=0.95)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--out", help="directory for estimate.csv")
    return parser


def _run_simulate(args) -> int:
    if args.preset is not None:
        config = replace(PRESETS[args.preset])
    else:
        config = StudyConfig.from_file(args.config)
    if args.replications is not None:
        config.replications = args.replications
    if args.iterations is not None:
        config.n_iterations = args.iterations
    if args.seed is not None:
        config.seed = args.seed
    if args.jobs is not None:
        config.n_jobs = args.jobs
    if args.trace:
        config.trace_dir = os.path.join(args.out, "trace")
    result = run_study(config)
    result.write(args.out)
    sys.stdout.write(result.text_table())
    return 0


def _default_statistics(n_samples: int) -> tuple[str, ...]:
    if n_samples == 2:
        return ("chapman", "mean-degree")
    return ("m0", "chao-lb", "mean-degree")


def _run_estimate(args) -> int:
    observed = read_observed(args.d0)
    names = (tuple(s.strip() for s in args.statistic.split(",") if s.strip())
             if args.statistic else _default_statistics(observed.n_samples))
    if not names:
        raise ValueError("no statistic named")
    rows = ["statistic,stage,point,variance,normal_low,normal_high,log_low,log_high"]
    for name in names:
        fitted = RaoBlackwellEstimator(
            statistic=name, method=args.method, n_iterations=args.iterations,
            level=args.level, random_state=args.seed).fit(observed)
        sys.stdout.write(fitted.summary() + "\n")
        for stage, rep in (("preliminary", fitted.preliminary_),
                           ("improved", fitted.improved_)):
            log_lo, log_hi = rep.log if rep.log is not None else ("", "")
            cells = [name, stage, f"{rep.point:.6g}", f"{rep.variance:.6g}",
                     f"{rep.normal[0]:.6g}", f"{rep.normal[1]:.6g}"]
            cells += [f"{v:.6g}" if v != "" else "" for v in (log_lo, log_hi)]
            rows.append(",".join(cells))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "estimate.csv"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _run_simulate(args)
        return _run_estimate(args)
    except (ValueError, EnumerationLimitError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
