"""Command-line entry point: ``simulate``, ``estimate`` and ``replicate-figure``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .confseq import ConfSeqParams
from .estimators import ESTIMATORS, estimate
from .harness import (
    FIGURES,
    SCALES,
    SimulationConfig,
    replicate_figure,
    run_replication,
    run_simulation,
    write_simulation,
)
from .history import LogFormatError, read_log


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-inference",
                                     description="Inference on data from adaptive experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo study")
    sim.add_argument("--config", type=Path, help="flat YAML key/value file")
    sim.add_argument("--reps", type=int, dest="replications")
    sim.add_argument("--horizon", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", type=str)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--setting")
    sim.add_argument("--design", help="thompson_floor, two_stage or fixed:p1,p2,...")
    sim.add_argument("--thompson-method", choices=("mc", "exact"))
    sim.add_argument("--num-draws", type=int)
    sim.add_argument("--floor-exponent", type=float)
    sim.add_argument("--floor-scale", type=float)
    sim.add_argument("--likelihood-var", type=float)
    sim.add_argument("--batch-size", type=int)
    sim.add_argument("--estimators", type=_csv_list)
    sim.add_argument("--targets", type=_csv_list, help="e.g. 2-0,1")
    sim.add_argument("--level", type=float)
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--save-logs", type=int, default=0, metavar="N",
                     help="also write JSONL logs of the first N replications")

    est = sub.add_parser("estimate", help="estimate arm values from a JSONL experiment log")
    est.add_argument("--log", required=True, type=Path)
    which = est.add_mutually_exclusive_group(required=True)
    which.add_argument("--arm", type=int)
    which.add_argument("--contrast", type=int, nargs=2, metavar=("W1", "W2"),
                       help="estimate Q(W1) - Q(W2)")
    est.add_argument("--estimator", action="append", choices=ESTIMATORS,
                     help="repeatable; default aw_two_point")
    est.add_argument("--level", type=float, default=0.95)
    est.add_argument("--alpha", type=float, default=0.7)
    est.add_argument("--wd-lambda", type=float)
    est.add_argument("--cs-c", type=float, default=2.0, help="reward support width")
    est.add_argument("--cs-v-opt", type=float, default=1.0)
    est.add_argument("--cs-support", type=float, nargs=2, metavar=("LO", "HI"))
    est.add_argument("--cs-first-prediction", type=float, default=0.0)

    fig = sub.add_parser("replicate-figure", help="write the data behind one figure")
    fig.add_argument("--id", required=True, choices=FIGURES)
    fig.add_argument("--scale", default="desk", choices=tuple(SCALES))
    fig.add_argument("--out", type=Path, default=Path("."))
    fig.add_argument("--reps", type=int)
    fig.add_argument("--horizon", type=int)
    fig.add_argument("--seed", type=int, default=0)
    fig.add_argument("--workers", type=int, default=1)
    return parser


def cmd_simulate(args) -> int:
    base = SimulationConfig.load(args.config) if args.config else SimulationConfig()
    overrides = {k: getattr(args, k) for k in (
        "replications", "horizon", "seed", "out", "workers", "setting", "design",
        "thompson_method", "num_draws", "floor_exponent", "floor_scale", "likelihood_var",
        "batch_size", "estimators", "targets", "level", "alpha")}
    config = base.with_overrides(**overrides)
    result = run_simulation(config)
    if config.out:
        paths = write_simulation(result, config.out)
        for i in range(min(args.save_logs, config.replications)):
            log = Path(config.out) / "logs" / f"replication_{i:06d}.jsonl"
            log.parent.mkdir(parents=True, exist_ok=True)
            run_replication(config, i, log)
        print("\n".join(str(p) for p in paths))
    else:
        json.dump(result.summary_rows(), sys.stdout, indent=2)
        print()
    return 0


def cmd_estimate(args) -> int:
    try:
        with open(args.log) as fh:
            history = read_log(fh)
    except LogFormatError as exc:
        print(f"{args.log}: {exc}", file=sys.stderr)
        return 2
    target = tuple(args.contrast) if args.contrast else args.arm
    cs = ConfSeqParams(c=args.cs_c, v_opt=args.cs_v_opt,
                       support=tuple(args.cs_support) if args.cs_support else None,
                       first_prediction=args.cs_first_prediction)
    out = []
    for name in args.estimator or ["aw_two_point"]:
        rep = estimate(history, name, target, args.level, args.alpha, args.wd_lambda, cs)
        out.append(rep.to_dict() if rep is not None else
                   {"estimator_name": name, "target": list(target) if args.contrast else target,
                    "point": None, "missing": True})
    json.dump(out, sys.stdout, indent=2)
    print()
    return 0


def cmd_replicate_figure(args) -> int:
    paths = replicate_figure(args.id, args.scale, args.out, args.reps, args.horizon,
                             args.seed, args.workers)
    print("\n".join(str(p) for p in paths))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "estimate":
            return cmd_estimate(args)
        return cmd_replicate_figure(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
