"""Command-line entry point: ``python -m flsgd <command> --config PATH``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    GridMismatch,
    IllPosedSource,
    InvalidArgument,
    StepSizeTooLarge,
    UnsupportedBranch,
    UnsupportedOperator,
)
from .harness.audit import run_bound_audit
from .harness.config import ExperimentConfig, load_config
from .harness.experiments import (
    build_model,
    choose_gamma,
    exponent_for,
    resolve_s,
    run_rate_experiment,
    tag_target,
    theorem_schedule,
    trial_seed,
)
from .harness.io import ingest_curves, write_csv
from .learner import RegularizationPlan, geometric_record_points, run_on_data, run_trials

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_DATA = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="TOML experiment config")
    common.add_argument("--seed", type=int, help="master seed (overrides experiment.seed)")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--override-step-size", type=float, dest="override_step",
                        help="use this gamma_1/gamma_0 and annotate reports as outside the theorem regime")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for Monte Carlo trials")
    p = _Parser(prog="flsgd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sim = sub.add_parser("simulate", parents=[common], help="one trajectory, emit its error curve")
    sim.add_argument("--data", type=Path, help="stream (y, x_1..x_m) rows from a CSV instead of simulating")
    sub.add_parser("rates", parents=[common], help="Monte Carlo rate experiment over n_list")
    sub.add_parser("audit", parents=[common], help="bound dominance audit")
    sub.add_parser("spectrum", parents=[common], help="dump eigenvalues of L_K, L_C, T_K, T_C")
    sub.add_parser("schedule", parents=[common], help="print (mu, lambda) and step-size admissibility per n")
    return p


def _load(args) -> tuple[ExperimentConfig, Path]:
    cfg = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = replace(cfg, experiment=replace(cfg.experiment, seed=args.seed))
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    if args.override_step is not None and args.override_step <= 0:
        raise ConfigError("--override-step-size must be positive")
    return cfg, Path(args.out or cfg.output.dir)


def cmd_rates(args) -> int:
    cfg, out = _load(args)
    rep = run_rate_experiment(cfg, jobs=args.jobs, out_dir=out, override_step=args.override_step)
    for r in rep.rows:
        flag = "" if r.admissible else "  [outside-theorem-regime]"
        print(f"n={r.n:>7d}  mean={r.mean:.6g}  stderr={r.stderr:.3g}  mu={r.mu:.4g}  lambda={r.lam:.4g}{flag}")
    adj = "" if rep.fit_log_adjusted is None else f"  (log-adjusted {rep.fit_log_adjusted.slope:+.4f})"
    print(f"{rep.tag} {rep.target}: slope {rep.fit.slope:+.4f} +/- {rep.fit.stderr:.4f}{adj}, "
          f"theory {rep.theoretical_slope:+.4f}, tolerance {rep.tolerance} -> {'PASS' if rep.passed else 'FAIL'}")
    print(f"wrote {out / 'rates.csv'}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_audit(args) -> int:
    cfg, out = _load(args)
    rep = run_bound_audit(cfg, out_dir=out)
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<32s} {c.points:>5d} points  {c.detail}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_spectrum(args) -> int:
    cfg, out = _load(args)
    inst = build_model(cfg)
    for name in ("LK", "LC", "TK", "TC"):
        dec = getattr(inst, f"{name}_dec")
        path = write_csv(out / f"spectrum_{name}.csv", ["ell", "lambda_ell"],
                         ((i + 1, v) for i, v in enumerate(dec.eigenvalues)))
        print(f"{name}: top {dec.eigenvalues[:3]}  -> {path}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    cfg, _ = _load(args)
    inst = build_model(cfg)
    tag = cfg.schedule.theorem
    exponent = exponent_for(cfg, tag_target(tag))
    s = resolve_s(cfg)
    out = []
    for n in cfg.experiment.n_list:
        ts = theorem_schedule(tag, exponent, s, int(n), cfg.schedule.epsilon)
        sched, adm = choose_gamma(inst, cfg, ts, int(n), s, args.override_step)
        out.append({"n": int(n), "mu": ts.mu, "lambda": ts.lam, "kind": ts.kind.value, "branch": ts.branch,
                    "rate": ts.rate, "log_factor": ts.log_factor, "gamma": sched.gamma,
                    "admissibility": adm.as_dict()})
    print(json.dumps({"theorem": tag, "exponent": exponent, "s": s, "schedules": out}, indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, out = _load(args)
    inst = build_model(cfg)
    tag = cfg.schedule.theorem
    n = int(cfg.experiment.n_list[-1])
    s = resolve_s(cfg)
    if args.data is not None:
        pairs = ingest_curves(args.data, inst.grid)
        n = len(pairs)
        if n == 0:
            raise DataError("no observations in data file")
    ts = theorem_schedule(tag, exponent_for(cfg, tag_target(tag)), s, n, cfg.schedule.epsilon)
    sched, adm = choose_gamma(inst, cfg, ts, n, s, args.override_step)
    plan = RegularizationPlan(ts.lam, rule=tag, epsilon=ts.epsilon or 0.0)
    if args.data is not None:
        state = run_on_data(inst, sched, plan, pairs)
        path = write_csv(out / "beta.csv", ["t", "beta"], zip(inst.grid.nodes, state.beta.values))
        print(f"processed {n} observations; final iterate -> {path}")
        return EXIT_OK
    rng = np.random.default_rng(trial_seed(cfg.experiment.seed, n, 0))
    res = run_trials(inst, sched, plan, n, geometric_record_points(n), [rng])
    recs = res.records(0)
    path = write_csv(out / "trajectory.csv", ["k", "pred_error", "est_error_K", "discarded_energy"],
                     ((r.k, r.pred_error, r.est_error_K, r.discarded_energy) for r in recs))
    if not adm.passes:
        print(f"outside-theorem-regime: gamma={sched.gamma:.6g} fails {adm.reason}")
    print(f"terminal pred_error={recs[-1].pred_error:.6g} est_error_K={recs[-1].est_error_K:.6g} -> {path}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "rates": cmd_rates, "audit": cmd_audit,
            "spectrum": cmd_spectrum, "schedule": cmd_schedule}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidArgument, IllPosedSource, StepSizeTooLarge, UnsupportedBranch,
            UnsupportedOperator) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GridMismatch) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
