"""Dominance audits: measured or brute-force quantities against the closed-form bounds."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import bounds
from ..errors import UnsupportedBranch
from ..learner import RegularizationPlan, StepSchedule, run_trials
from ..model import ModelInstance
from .config import ExperimentConfig
from .experiments import build_model, exponent_for, resolve_s, theorem_schedule, trial_seed
from .io import write_csv

ALPHAS = (0.5, 0.75, 1.0)
SERIES_LATTICE = {
    "nu": (0.0, 0.3, 0.7, 1.0, 2.0),
    "mu": (0.2, 0.5, 0.8),
    "lam": (0.01, 0.1),
    "gamma1": (0.02, 0.2),
    "k": (1, 16, 256, 4096),
}
# spawn-key tags keeping audit streams disjoint from rate-experiment streams (tagged by n)
UNIFORM_STREAM, PREDICTION_STREAM, ESTIMATION_STREAM = 2**32 - 1, 2**32 - 2, 2**32 - 3
BOUND_HEADER = ["k", "lambda", "measured", "bound_approx", "bound_sample", "bound_total", "mc_stderr"]


@dataclass
class AuditCheck:
    name: str
    points: int
    violations: int
    detail: str = ""
    rows: list[tuple] = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass
class AuditReport:
    checks: list[AuditCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> AuditCheck:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "points": c.points, "violations": c.violations, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def contraction_lattice(samples: int, seed: int) -> AuditCheck:
    """Random diagonal operators with admissible steps; brute-force norm vs closed-form bound."""
    rng = np.random.default_rng([seed, 3])
    bad = 0
    worst = 0.0
    for i in range(samples):
        alpha = ALPHAS[i % len(ALPHAS)]
        c_star = float(rng.uniform(0.05, 10.0))
        eig = rng.uniform(0.0, c_star, size=int(rng.integers(1, 40)))
        lam = 0.0 if i % 5 == 0 else float(rng.uniform(0.0, 1.0))
        gam = rng.uniform(0.0, 1.0, size=int(rng.integers(0, 80))) / (c_star + lam)
        lhs = bounds.contraction_norm_sq(eig, alpha, gam, lam)
        rhs = bounds.contraction_norm_bound(alpha, c_star, gam, lam)
        worst = max(worst, lhs / rhs)
        bad += lhs > rhs
    return AuditCheck("contraction", samples, int(bad), f"max lhs/rhs = {worst:.4g}")


def series_lattice_points() -> list[bounds.SeriesCase]:
    pts = []
    for nu, mu, lam, g1, k in itertools.product(*SERIES_LATTICE.values()):
        if nu == 0 and mu <= 0.5:
            continue
        pts.append(bounds.SeriesCase(nu, mu, g1, lam, k))
    return pts


def series_lattice() -> AuditCheck:
    bad = 0
    worst = 0.0
    branches = set()
    pts = series_lattice_points()
    for case in pts:
        lhs = bounds.step_series(case)
        res = bounds.step_series_bound(case)
        branches.add(res.branch)
        worst = max(worst, lhs / res.bound)
        bad += lhs > res.bound
    rejected = 0
    for nu, mu in ((0.0, 0.3), (0.0, 0.5), (0.0, 0.2)):
        try:
            bounds.step_series_bound(bounds.SeriesCase(nu, mu, 0.1, 0.1, 16))
        except UnsupportedBranch:
            rejected += 1
    bad += 3 - rejected
    bad += len(bounds.Branch) - len(branches)
    detail = f"{len(branches)}/{len(bounds.Branch)} branches, max lhs/rhs = {worst:.4g}, {rejected}/3 gaps rejected"
    return AuditCheck("series", len(pts), int(bad), detail)


def _seeds(seed: int, tag: int, trials: int) -> list[np.random.Generator]:
    return [np.random.default_rng(trial_seed(seed, tag, t)) for t in range(trials)]


def _mc(vals: np.ndarray) -> tuple[float, float]:
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


def uniform_audit(instance: ModelInstance, theta: float, trials: int, n: int, seed: int) -> AuditCheck:
    """Trajectories with theory-admissible polynomial steps stay below the uniform bound."""
    ts = theorem_schedule("T1", theta, None, n)
    kps = instance.ops.kappa_product_sq
    cap = min(bounds.series_caps(ts.mu, instance.kurtosis_c, kps).cap_benign, 1 / (kps + ts.lam))
    sched = StepSchedule.polynomial(cap, ts.mu)
    rec = list(range(1, n + 2, max(1, n // 64))) + [n + 1]
    res = run_trials(instance, sched, RegularizationPlan(ts.lam), n, rec, _seeds(seed, UNIFORM_STREAM, trials),
                     estimation=False)
    U = bounds.uniform_bound(instance)
    rows, bad = [], 0
    for i, k in enumerate(res.record_at):
        m, se = _mc(res.pred[i])
        bad += m > U + 3 * se
        rows.append((k, ts.lam, m, None, None, U, se))
    return AuditCheck("uniform", len(rows), int(bad), f"gamma1 = {cap:.4g}, bound = {U:.4g}", rows)


def dominance_audit(
    instance: ModelInstance, cfg: ExperimentConfig, target: str, ks: list[int], trials: int, seed: int
) -> list[AuditCheck]:
    """MC error of beta_{k+1} against every evaluated decomposition bound."""
    s = resolve_s(cfg)
    n = max(ks)
    exponent = exponent_for(cfg, target)
    ts = theorem_schedule("T1" if target == "prediction" else "T4", exponent, s, n, cfg.schedule.epsilon)
    kps = instance.ops.kappa_product_sq
    if cfg.audit.step_mode == "caps":
        gamma1 = bounds.series_caps(ts.mu, instance.kurtosis_c, kps).cap_benign
    else:
        gamma1 = cfg.audit.step_fraction / (kps + ts.lam)
    sched = StepSchedule.polynomial(gamma1, ts.mu)
    stream = PREDICTION_STREAM if target == "prediction" else ESTIMATION_STREAM
    res = run_trials(instance, sched, RegularizationPlan(ts.lam), n, [k + 1 for k in ks],
                     _seeds(seed, stream, trials))
    measured = res.pred if target == "prediction" else res.est
    fn = bounds.prediction_bound if target == "prediction" else bounds.estimation_bound
    modes = [("benign", None)] + ([("capacity", s)] if s is not None and s < 1 else [])
    forms = ["operator"] + (["source"] if instance.source(target) is not None else [])
    checks = []
    for (mode, s_val), form in itertools.product(modes, forms):
        rows, bad = [], 0
        for i, k in enumerate(ks):
            m, se = _mc(measured[i])
            b = fn(instance, sched.gammas(k), ts.lam, mode=mode, s=s_val, form=form)
            bad += m > b.total + 3 * se
            rows.append((k, ts.lam, m, b.approx, b.sample, b.total, se))
        checks.append(AuditCheck(f"{target}-{mode}-{form}", len(rows), int(bad), f"gamma1 = {gamma1:.4g}", rows))
    return checks


def run_bound_audit(
    cfg: ExperimentConfig, *, out_dir: str | Path | None = None, instance: ModelInstance | None = None
) -> AuditReport:
    instance = build_model(cfg) if instance is None else instance
    a = cfg.audit
    seed = int(cfg.experiment.seed)
    checks = [contraction_lattice(a.contraction_samples, seed), series_lattice()]
    theta = exponent_for(cfg, "prediction") if _has(cfg, "prediction") else 0.5
    checks.append(uniform_audit(instance, theta, a.uniform_trials, a.uniform_n, seed))
    for target in ("prediction", "estimation"):
        if _has(cfg, target):
            checks.extend(dominance_audit(instance, cfg, target, list(a.dominance_k), a.dominance_trials, seed))
    report = AuditReport(checks)
    if out_dir is not None:
        out = Path(out_dir)
        for c in checks:
            if c.rows:
                write_csv(out / f"bounds_{c.name}.csv", BOUND_HEADER, c.rows)
        (out / "audit.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return report


def _has(cfg: ExperimentConfig, target: str) -> bool:
    return cfg.source.kind == target or target in cfg.source.extra
