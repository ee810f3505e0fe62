"""Command-line entry points: run experiments, validate, replay diagnostics."""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .harness import load_config, run_diagnostic_cell, run_experiment
from .validate import run_validation_suite


def _apply_overrides(config, args):
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        filename = os.path.basename(config.out_path)
        config = replace(config, out_path=os.path.join(args.out, filename))
    return config


def _cmd_run(args):
    config = _apply_overrides(load_config(args.config), args)
    rows_path, summary_path = run_experiment(config, threads=args.threads)
    print(f"wrote {rows_path}")
    print(f"wrote {summary_path}")
    return 0


def _cmd_validate(args):
    failures = run_validation_suite(seed=args.seed if args.seed is not None else 0)
    return 1 if failures else 0


def _cmd_diag(args):
    config = _apply_overrides(load_config(args.config), args)
    seed = config.base_seed
    records, report = run_diagnostic_cell(config, seed)
    final = records[-1]
    print(f"rounds: {report.rounds}   final cumulative regret: {final.cum_regret:.4f}")
    print(
        f"weighted potential: {report.weighted_lhs:.4f} <= {report.weighted_rhs:.4f}"
        f"  [{'ok' if report.weighted_ok else 'VIOLATED'}]"
    )
    print(
        f"max-norm potential: {report.max_lhs:.4f} <= {report.max_rhs:.4f}"
        f" (kappa_hat={report.kappa_hat:.5f})  [{'ok' if report.max_ok else 'VIOLATED'}]"
    )
    print(
        f"centered potential: {report.centered_lhs:.4f} <= {report.centered_rhs:.4f}"
        f"  [{'ok' if report.centered_ok else 'VIOLATED'}]"
    )
    print(
        f"step movement: {report.max_step_movement:.6f} <= {report.movement_bound:.6f}"
        f"  [{'ok' if report.movement_ok else 'VIOLATED'}]"
    )
    print(f"max kappa_star over rounds: {report.kappa_star_max:.5f}")
    print(f"confidence flag held every round: {report.coverage_all_rounds}")
    return 0 if report.all_ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mnlbandit",
        description="MNL bandit benchmark: run experiments, validate, replay diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment grid from a config file")
    run_p.add_argument("--config", required=True, help="key = value config file")
    run_p.add_argument("--out", default=None, help="directory for output CSVs")
    run_p.add_argument("--threads", type=int, default=1, help="worker processes")
    run_p.add_argument("--seed", type=int, default=None, help="override base_seed")
    run_p.set_defaults(func=_cmd_run)

    val_p = sub.add_parser("validate", help="run the property/oracle spot checks")
    val_p.add_argument("--seed", type=int, default=None)
    val_p.add_argument("--out", default=None, help=argparse.SUPPRESS)
    val_p.add_argument("--threads", type=int, default=1, help=argparse.SUPPRESS)
    val_p.set_defaults(func=_cmd_validate)

    diag_p = sub.add_parser("diag", help="replay one online-policy cell with diagnostics")
    diag_p.add_argument("--config", required=True)
    diag_p.add_argument("--out", default=None)
    diag_p.add_argument("--threads", type=int, default=1, help=argparse.SUPPRESS)
    diag_p.add_argument("--seed", type=int, default=None, help="override base_seed")
    diag_p.set_defaults(func=_cmd_diag)
    return parser


def main(argv=None):
    np.seterr(over="raise")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
