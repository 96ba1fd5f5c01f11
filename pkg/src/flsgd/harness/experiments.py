"""Rate experiments and the theorem-driven (mu, lambda) schedules."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import t as student_t

from ..errors import InvalidArgument
from ..grid import DiscreteFunction, build_grid
from ..kernels import KernelSpec
from ..learner import (
    AdmissibilityReport,
    RegularizationPlan,
    StepKind,
    StepSchedule,
    TrialErrors,
    instance_admissibility,
    run_trials,
)
from ..model import (
    CommutingProfile,
    ModelInstance,
    SourceCondition,
    SourceKind,
    build_operators,
    commuting_instance,
    infer_source,
    make_beta_star_estimation,
    make_beta_star_prediction,
)
from .config import ExperimentConfig
from .io import write_csv

# --------------------------------------------------------------------------- schedules


@dataclass(frozen=True)
class TheoremSchedule:
    tag: str
    mu: float
    lam: float
    kind: StepKind
    target: str  # "prediction" or "estimation"
    branch: str
    rate: float  # theoretical log-log slope
    log_factor: bool
    epsilon: float | None = None


def theorem_schedule(
    tag: str,
    exponent: float,
    s: float | None,
    n: int,
    epsilon: float = 0.05,
    *,
    saturation_branch: bool = False,
) -> TheoremSchedule:
    """(mu, lambda) and the predicted rate for a theorem tag.

    ``exponent`` is theta for T1-T3 and the baseline, r for T4-T5. ``saturation_branch``
    selects the alternative T2 parameterization available when 2 theta > 2 - s.
    """
    if not 0 < exponent <= 1:
        raise InvalidArgument(f"exponent must lie in (0, 1], got {exponent}")
    if s is None:
        s = 1.0
    if not 0 < s <= 1:
        raise InvalidArgument(f"s must lie in (0, 1], got {s}")
    if n < 1:
        raise InvalidArgument("n must be positive")

    def eps_in(upper: float) -> float:
        if not 0 < epsilon < upper:
            raise InvalidArgument(f"epsilon must lie in (0, {upper:.6g}), got {epsilon}")
        return epsilon

    if tag == "T1":
        th = exponent
        mu = 2 * th / (2 * th + 1)
        if th <= 0.5:
            return TheoremSchedule(tag, mu, n ** (-1 / (2 * th + 1)), StepKind.POLYNOMIAL, "prediction",
                                   "theta<=1/2", -mu, True)
        e = eps_in(mu)
        return TheoremSchedule(tag, mu, n ** (-1 / (2 * th + 1) + e / (2 * th)), StepKind.POLYNOMIAL,
                               "prediction", "theta>1/2", -mu + e, False, e)
    if tag == "T2":
        if not s < 1:
            raise InvalidArgument("T2 needs s < 1")
        th = exponent
        if saturation_branch:
            if not 2 * th > 2 - s:
                raise InvalidArgument("the alternative T2 branch needs 2 theta > 2 - s")
            mu = 2 * th / (2 * th + 1)
            e = eps_in(mu)
            return TheoremSchedule(tag, mu, n ** (-1 / (2 * th + 1) + e / (2 * th)), StepKind.POLYNOMIAL,
                                   "prediction", "2theta>2-s,epsilon", -mu + e, False, e)
        m = min(2 * th, 2 - s)
        mu = m / (m + 1)
        branch = "2theta<=2-s" if 2 * th <= 2 - s else "2theta>=2-s"
        return TheoremSchedule(tag, mu, n ** (-1 / (m + 1)), StepKind.POLYNOMIAL, "prediction", branch, -mu, False)
    if tag == "T3":
        th = exponent
        mu = 2 * th / (2 * th + 1)
        return TheoremSchedule(tag, mu, n ** (-1 / (2 * th + 1)), StepKind.CONSTANT, "prediction",
                               "s=1" if s == 1 else "s<1", -mu, s == 1)
    if tag in ("T4", "T5"):
        r = exponent
        a = 2 * r + s
        mu = a / (a + 1)
        rate = -2 * r / (a + 1)
        if tag == "T5":
            return TheoremSchedule(tag, mu, n ** (-1 / (a + 1)), StepKind.CONSTANT, "estimation", "constant", rate, False)
        if a < 1:
            return TheoremSchedule(tag, mu, n ** (-1 / (a + 1)), StepKind.POLYNOMIAL, "estimation", "2r+s<1", rate, False)
        e = eps_in(2 * r / (a + 1))
        return TheoremSchedule(tag, mu, n ** (-1 / (a + 1) + e / (2 * r)), StepKind.POLYNOMIAL, "estimation",
                               "2r+s>=1", rate + e, False, e)
    if tag == "unregularized-baseline":
        mu = min(0.5, 2 * exponent / (2 * exponent + 1))
        return TheoremSchedule(tag, mu, 0.0, StepKind.POLYNOMIAL, "prediction", "lambda=0", -mu, True)
    raise InvalidArgument(f"unknown theorem tag {tag!r}")


# --------------------------------------------------------------------------- model construction


def resolve_s(cfg: ExperimentConfig) -> float | None:
    s = cfg.schedule.s
    if s == "auto":
        if cfg.model.kind == "commuting":
            return 1.0 / (cfg.model.p_K + cfg.model.p_C)
        return 1.0
    return None if s is None else float(s)


def seed_coefficients(cfg: ExperimentConfig, count: int) -> np.ndarray:
    ell = np.arange(1, count + 1, dtype=float)
    return cfg.source.scale * ell ** (-cfg.source.decay)


def build_model(cfg: ExperimentConfig) -> ModelInstance:
    grid = build_grid(cfg.grid.size, cfg.grid.scheme)
    m, src = cfg.model, cfg.source
    if m.kind == "commuting":
        profile = CommutingProfile(m.p_K, m.p_C, m.length)
        return commuting_instance(
            grid, profile, src.kind, src.exponent, seed_coefficients(cfg, m.length), m.noise_sigma,
            extra_sources=dict(src.extra), rel_cutoff=m.rel_cutoff,
        )
    K = KernelSpec(m.K.family, tuple(m.K.parameters))
    C = KernelSpec(m.C.family, tuple(m.C.parameters))
    ops = build_operators(K, C, grid)
    count = src.modes or m.length
    kind = SourceKind(src.kind)
    dec = ops.TK_dec if kind is SourceKind.PREDICTION else ops.TC_dec
    g = DiscreteFunction(dec.vectors[:, :count] @ seed_coefficients(cfg, count), grid)
    if kind is SourceKind.PREDICTION:
        made = make_beta_star_prediction(src.exponent, g, ops.TK_dec, ops.LC_dec, m.rel_cutoff)
        beta, primary = made.beta_star, SourceCondition(kind, src.exponent, made.seed_function)
    else:
        beta = make_beta_star_estimation(src.exponent, g, ops.LK_dec, ops.TC_dec)
        primary = SourceCondition(kind, src.exponent, g)
    sources = [primary] + [infer_source(ops, beta, k, e, m.rel_cutoff) for k, e in src.extra.items()]
    return ModelInstance(ops, beta, m.noise_sigma, 3.0, m.rel_cutoff, tuple(sources))


def exponent_for(cfg: ExperimentConfig, target: str) -> float:
    if cfg.source.kind == target:
        return cfg.source.exponent
    if target in cfg.source.extra:
        return cfg.source.extra[target]
    raise InvalidArgument(f"config carries no {target} source exponent")


def tag_target(tag: str) -> str:
    return "estimation" if tag in ("T4", "T5") else "prediction"


# --------------------------------------------------------------------------- seeding and fitting


def trial_seed(master: int, n: int, trial: int) -> int:
    """Per-trial 64-bit seed, a pure function of (master seed, n, trial)."""
    ss = np.random.SeedSequence(int(master), spawn_key=(int(n), int(trial)))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    degenerate: bool = False


def fit_slope(ns, means, stderrs=None, *, log_adjust: bool = False) -> SlopeFit:
    """Weighted least squares of log(mean) on log(n); weights (mean/stderr)^2 when available."""
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    if ns.size < 2 or np.any(~np.isfinite(means)) or np.any(means <= 0):
        return SlopeFit(math.nan, math.nan, math.nan, True)
    x = np.log(ns)
    y = np.log(means)
    if log_adjust:
        y = y - np.log(np.log(ns + 1))
    X = np.column_stack([np.ones_like(x), x])
    known = stderrs is not None and np.all(np.asarray(stderrs) > 0)
    wts = (means / np.asarray(stderrs, dtype=float)) ** 2 if known else np.ones_like(x)
    XtW = X.T * wts
    A = XtW @ X
    coef = np.linalg.solve(A, XtW @ y)
    if known:
        cov = np.linalg.inv(A)
    else:
        dof = max(x.size - 2, 1)
        resid = y - X @ coef
        cov = np.linalg.inv(A) * float(resid @ resid) / dof
    return SlopeFit(float(coef[1]), float(coef[0]), float(math.sqrt(max(cov[1, 1], 0.0))))


# --------------------------------------------------------------------------- rate experiment


@dataclass
class RateRow:
    n: int
    mean: float
    stderr: float
    mu: float
    lam: float
    gamma: float
    admissible: bool
    binding: str
    max_admissible: float


@dataclass
class RateReport:
    tag: str
    target: str
    rows: list[RateRow]
    fit: SlopeFit
    fit_log_adjusted: SlopeFit | None
    theoretical_slope: float
    tolerance: float
    step_mode: str
    epsilon: float | None
    annotations: list[str] = field(default_factory=list)
    trials: dict[int, dict[str, np.ndarray]] = field(default_factory=dict, repr=False)

    @property
    def degenerate(self) -> bool:
        return self.fit.degenerate

    @property
    def passed(self) -> bool:
        return (not self.fit.degenerate) and abs(self.fit.slope - self.theoretical_slope) <= self.tolerance

    @property
    def outside_theorem_regime(self) -> bool:
        return not all(r.admissible for r in self.rows)

    def terminal(self, n: int) -> np.ndarray:
        return self.trials[n][self.target]

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "target": self.target,
            "theoretical_slope": self.theoretical_slope,
            "fitted_slope": self.fit.slope,
            "fitted_slope_stderr": self.fit.stderr,
            "fitted_slope_log_adjusted": None if self.fit_log_adjusted is None else self.fit_log_adjusted.slope,
            "degenerate": self.fit.degenerate,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "step_mode": self.step_mode,
            "epsilon": self.epsilon,
            "outside_theorem_regime": self.outside_theorem_regime,
            "annotations": self.annotations,
            "rows": [asdict(r) for r in self.rows],
        }


_WORKER: dict = {}


def _init_worker(instance: ModelInstance) -> None:
    _WORKER["instance"] = instance


def _run_chunk(args) -> TrialErrors:
    schedule, plan, n, seeds = args
    rngs = [np.random.default_rng(s) for s in seeds]
    return run_trials(_WORKER["instance"], schedule, plan, n, [n + 1], rngs)


def _run_cell(instance, schedule, plan, n, seeds, pool) -> TrialErrors:
    if pool is None:
        return run_trials(instance, schedule, plan, n, [n + 1], [np.random.default_rng(s) for s in seeds])
    jobs = pool._max_workers
    chunks = [list(c) for c in np.array_split(np.asarray(seeds, dtype=np.uint64), jobs) if len(c)]
    parts = list(pool.map(_run_chunk, [(schedule, plan, n, [int(s) for s in c]) for c in chunks]))
    cat = lambda a: None if a[0] is None else np.concatenate(a, axis=1)  # noqa: E731
    return TrialErrors(parts[0].record_at, cat([p.pred for p in parts]), cat([p.est for p in parts]),
                       cat([p.discarded for p in parts]))


def choose_gamma(
    instance: ModelInstance, cfg: ExperimentConfig, ts: TheoremSchedule, n: int, s: float | None,
    override: float | None,
) -> tuple[StepSchedule, AdmissibilityReport]:
    horizon = n if ts.kind is StepKind.CONSTANT else None
    probe = StepSchedule(ts.kind, 1.0, ts.mu, horizon)
    theorem = ts.tag
    cap_s = s if (s is not None and s < 1) else None
    if ts.tag == "T2":
        cap_s = s
    report = instance_admissibility(instance, probe, ts.lam, theorem, cap_s)
    if override is not None:
        gamma = override
    elif cfg.schedule.step_mode == "override":
        gamma = float(cfg.schedule.gamma)
    else:
        gamma = report.max_admissible
    schedule = StepSchedule(ts.kind, gamma, ts.mu, horizon)
    return schedule, instance_admissibility(instance, schedule, ts.lam, theorem, cap_s)


def run_rate_experiment(
    cfg: ExperimentConfig,
    *,
    jobs: int = 1,
    out_dir: str | Path | None = None,
    override_step: float | None = None,
    instance: ModelInstance | None = None,
) -> RateReport:
    instance = build_model(cfg) if instance is None else instance
    tag = cfg.schedule.theorem
    target = tag_target(tag)
    exponent = exponent_for(cfg, target)
    s = resolve_s(cfg)
    seed = int(cfg.experiment.seed)
    rows: list[RateRow] = []
    trials: dict[int, dict[str, np.ndarray]] = {}
    csv_rows = []
    annotations: list[str] = []
    ts = None
    pool = ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(instance,)) if jobs > 1 else None
    try:
        for n in cfg.experiment.n_list:
            n = int(n)
            ts = theorem_schedule(tag, exponent, s, n, cfg.schedule.epsilon)
            schedule, adm = choose_gamma(instance, cfg, ts, n, s, override_step)
            plan = RegularizationPlan(ts.lam, rule=tag, epsilon=ts.epsilon or 0.0)
            seeds = [trial_seed(seed, n, t) for t in range(cfg.experiment.trials)]
            res = _run_cell(instance, schedule, plan, n, seeds, pool)
            pred, est = res.pred[-1], res.est[-1]
            trials[n] = {"prediction": pred, "estimation": est, "seeds": np.asarray(seeds, dtype=np.uint64)}
            vals = trials[n][target]
            se = float(vals.std(ddof=1) / math.sqrt(vals.size))
            rows.append(RateRow(n, float(vals.mean()), se, ts.mu, ts.lam, schedule.gamma, adm.passes,
                                adm.binding, adm.max_admissible))
            if not adm.passes:
                annotations.append(
                    f"outside-theorem-regime: n={n} gamma={schedule.gamma:.6g} fails {adm.reason} "
                    f"(admissible <= {adm.max_admissible:.6g})"
                )
            csv_rows.extend(
                (n, t, float(pred[t]), float(est[t]), ts.mu, ts.lam, seeds[t]) for t in range(len(seeds))
            )
    finally:
        if pool is not None:
            pool.shutdown()
    ns = [r.n for r in rows]
    means = [r.mean for r in rows]
    ses = [r.stderr for r in rows]
    fit = fit_slope(ns, means, ses)
    fit_log = fit_slope(ns, means, ses, log_adjust=True) if ts.log_factor else None
    mode = "override" if (override_step is not None or cfg.schedule.step_mode == "override") else "caps"
    report = RateReport(tag, target, rows, fit, fit_log, ts.rate, cfg.experiment.tolerance, mode, ts.epsilon,
                        annotations, trials)
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "rates.csv", ["n", "trial", "pred_error", "est_error_K", "mu", "lambda", "seed"], csv_rows)
        write_csv(out / "summary.csv", ["n", "mean", "stderr"], [(r.n, r.mean, r.stderr) for r in rows])
        (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return report


def paired_difference(a: np.ndarray, b: np.ndarray, level: float = 0.95) -> tuple[float, float, float]:
    """Mean of a - b with its two-sided paired t confidence interval."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    mean = float(d.mean())
    se = float(d.std(ddof=1) / math.sqrt(d.size))
    q = float(student_t.ppf(0.5 + level / 2, d.size - 1))
    return mean, mean - q * se, mean + q * se
