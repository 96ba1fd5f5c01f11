"""Online regularized SGD for functional linear regression.

    beta_{k+1} = beta_k - gamma_k [ (<beta_k, X_k> - Y_k) L_K X_k + lam beta_k ],  beta_1 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from . import bounds
from .errors import DataError, InvalidArgument
from .grid import DiscreteFunction, Grid, check_same_grid
from .metrics import ErrorRecord, estimation_errors_K, prediction_errors
from .model import ModelInstance
from .operators import DiscreteOperator, trace_power

BLOCK = 128  # samples drawn per RNG call; part of the reproducibility contract


class StepKind(str, Enum):
    POLYNOMIAL = "polynomial"  # gamma_k = gamma k^{-mu}
    CONSTANT = "constant"  # gamma_k = gamma n^{-mu}


@dataclass(frozen=True)
class StepSchedule:
    kind: StepKind
    gamma: float  # gamma_1 for polynomial, gamma_0 for constant
    mu: float
    horizon: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StepKind(self.kind))
        if not self.gamma > 0:
            raise InvalidArgument("step-size coefficient must be positive")
        if not 0 < self.mu < 1:
            raise InvalidArgument("mu must lie in (0, 1)")
        if self.kind is StepKind.CONSTANT and (self.horizon is None or self.horizon < 1):
            raise InvalidArgument("constant schedule needs a horizon n >= 1")

    @classmethod
    def polynomial(cls, gamma1: float, mu: float) -> StepSchedule:
        return cls(StepKind.POLYNOMIAL, gamma1, mu)

    @classmethod
    def constant(cls, gamma0: float, mu: float, horizon: int) -> StepSchedule:
        return cls(StepKind.CONSTANT, gamma0, mu, horizon)

    def gamma_k(self, k: int) -> float:
        if self.kind is StepKind.POLYNOMIAL:
            return self.gamma * k ** (-self.mu)
        return self.gamma * self.horizon ** (-self.mu)

    def gammas(self, k: int) -> np.ndarray:
        """gamma_1 .. gamma_k."""
        if self.kind is StepKind.POLYNOMIAL:
            return self.gamma * np.arange(1, k + 1, dtype=float) ** (-self.mu)
        return np.full(k, self.gamma * self.horizon ** (-self.mu))

    @property
    def max_step(self) -> float:
        return self.gamma_k(1)

    def with_gamma(self, gamma: float) -> StepSchedule:
        return replace(self, gamma=gamma)


@dataclass(frozen=True)
class RegularizationPlan:
    lam: float
    rule: str = "fixed"
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or self.lam < 0:
            raise InvalidArgument("lambda must be finite and nonnegative")
        if self.epsilon < 0:
            raise InvalidArgument("epsilon must be nonnegative")


@dataclass(frozen=True)
class LearnerState:
    beta: DiscreteFunction
    schedule: StepSchedule
    plan: RegularizationPlan
    k: int = 1

    @classmethod
    def initial(cls, grid: Grid, schedule: StepSchedule, plan: RegularizationPlan) -> LearnerState:
        return cls(grid.zeros(), schedule, plan, 1)


def sgd_step(state: LearnerState, X: DiscreteFunction, Y: float, LK: DiscreteOperator) -> LearnerState:
    check_same_grid(state.beta, X, LK)
    if not np.isfinite(Y):
        raise DataError(f"non-finite response at step {state.k}", step=state.k)
    b = state.beta.values
    w = state.beta.grid.weights
    resid = float(np.dot(w * b, X.values)) - Y
    gamma = state.schedule.gamma_k(state.k)
    new = b - gamma * (resid * (LK.matrix @ X.values) + state.plan.lam * b)
    if not np.all(np.isfinite(new)):
        raise DataError(f"iterate diverged at step {state.k}", step=state.k)
    return LearnerState(DiscreteFunction(new, state.beta.grid), state.schedule, state.plan, state.k + 1)


@dataclass(frozen=True)
class TrialErrors:
    """Errors of beta_k at each recorded k; arrays are (len(record_at), trials)."""

    record_at: tuple[int, ...]
    pred: np.ndarray
    est: np.ndarray | None
    discarded: np.ndarray | None

    def records(self, trial: int = 0) -> list[ErrorRecord]:
        out = []
        for i, k in enumerate(self.record_at):
            est = None if self.est is None else float(self.est[i, trial])
            disc = 0.0 if self.discarded is None else float(self.discarded[i, trial])
            out.append(ErrorRecord(k, float(self.pred[i, trial]), est, disc))
        return out


def geometric_record_points(n: int) -> list[int]:
    """1, 2, 4, ... up to n+1, always ending at n+1."""
    pts = [1]
    while pts[-1] * 2 <= n:
        pts.append(pts[-1] * 2)
    if pts[-1] != n + 1:
        pts.append(n + 1)
    return pts


def run_trials(
    instance: ModelInstance,
    schedule: StepSchedule,
    plan: RegularizationPlan,
    n: int,
    record_at: Sequence[int],
    rngs: Sequence[np.random.Generator],
    *,
    estimation: bool = True,
) -> TrialErrors:
    """Run one independent trajectory per generator, vectorized across trials.

    Each trajectory draws its samples from its own generator in blocks of ``BLOCK``
    (predictor scores first, then noise), so the samples a trial sees do not depend
    on how trials are grouped. Batched arithmetic can still move the last ulp.
    """
    if n < 0:
        raise InvalidArgument("n must be nonnegative")
    rec = sorted(set(int(k) for k in record_at))
    if rec and (rec[0] < 1 or rec[-1] > n + 1):
        raise InvalidArgument(f"record indices must lie in [1, {n + 1}]")
    T = len(rngs)
    grid = instance.grid
    w = grid.weights
    basis = instance.kl_basis
    LKt = instance.LK.matrix.T
    wb_star = w * instance.beta_star.values
    sigma = instance.noise_sigma
    lam = plan.lam
    gam = schedule.gammas(n)
    B = np.zeros((T, grid.size))

    pred = np.empty((len(rec), T))
    est = np.empty((len(rec), T)) if estimation else None
    disc = np.empty((len(rec), T)) if estimation else None
    slot = {k: i for i, k in enumerate(rec)}

    def record(k: int) -> None:
        i = slot[k]
        pred[i] = prediction_errors(B, instance)
        if estimation:
            est[i], disc[i] = estimation_errors_K(B, instance)

    if 1 in slot:
        record(1)
    for start in range(0, n, BLOCK):
        size = min(BLOCK, n - start)
        xi = np.empty((size, T, basis.shape[1]))
        zeta = np.empty((size, T))
        for t, rng in enumerate(rngs):
            xi[:, t, :] = rng.standard_normal((size, basis.shape[1]))
            zeta[:, t] = rng.standard_normal(size)
        X = xi @ basis.T  # (size, T, m)
        Y = X @ wb_star + sigma * zeta
        Xw = X * w
        LKX = X @ LKt
        with np.errstate(over="ignore", invalid="ignore"):  # divergence is reported below
            for j in range(size):
                k = start + j + 1  # this update produces beta_{k+1}
                resid = np.einsum("tm,tm->t", Xw[j], B) - Y[j]
                B -= gam[k - 1] * (resid[:, None] * LKX[j] + lam * B)
                if k + 1 in slot:
                    record(k + 1)
        if not np.all(np.isfinite(B)):
            bad = [t for t in range(T) if not np.all(np.isfinite(B[t]))]
            raise DataError(f"iterate diverged before step {start + size + 1} in trial(s) {bad}", step=start + size)
    return TrialErrors(tuple(rec), pred, est, disc)


def run_trajectory(
    instance: ModelInstance,
    schedule: StepSchedule,
    plan: RegularizationPlan,
    n: int,
    record_at: Sequence[int],
    rng: np.random.Generator,
    *,
    estimation: bool = True,
) -> list[ErrorRecord]:
    return run_trials(instance, schedule, plan, n, record_at, [rng], estimation=estimation).records(0)


def run_on_data(
    instance: ModelInstance,
    schedule: StepSchedule,
    plan: RegularizationPlan,
    pairs: Sequence[tuple[DiscreteFunction, float]],
) -> LearnerState:
    """Stream externally supplied (X, Y) pairs through the recursion."""
    state = LearnerState.initial(instance.grid, schedule, plan)
    for X, Y in pairs:
        state = sgd_step(state, X, Y, instance.LK)
    return state


# --------------------------------------------------------------------------- admissibility


@dataclass(frozen=True)
class Check:
    name: str
    cap: float
    passed: bool


@dataclass(frozen=True)
class AdmissibilityReport:
    value: float
    checks: tuple[Check, ...]
    binding: str = field(init=False)
    max_admissible: float = field(init=False)
    passes: bool = field(init=False)
    reason: str | None = field(init=False)

    def __post_init__(self) -> None:
        tight = min(self.checks, key=lambda c: c.cap)
        failed = [c.name for c in self.checks if not c.passed]
        object.__setattr__(self, "binding", tight.name)
        object.__setattr__(self, "max_admissible", tight.cap)
        object.__setattr__(self, "passes", not failed)
        object.__setattr__(self, "reason", failed[0] if failed else None)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "passes": self.passes,
            "reason": self.reason,
            "binding": self.binding,
            "max_admissible": self.max_admissible,
            "checks": {c.name: {"cap": c.cap, "passed": c.passed} for c in self.checks},
        }


def admissibility_check(
    schedule: StepSchedule,
    lam: float,
    kappa1_sq: float,
    kappa2_sq: float,
    c: float,
    s: float | None = None,
    *,
    theorem: str | None = None,
    trace_TKs: float | None = None,
) -> AdmissibilityReport:
    """Compare the schedule's coefficient (gamma_1 or gamma_0) against every applicable cap.

    Always checked: ``step-contraction``, i.e. gamma_k (kappa1^2 kappa2^2 + lam) <= 1.
    Tag-specific caps: T1/T4/baseline ``series-benign``; T2 ``unit-contraction`` and
    ``series-capacity``; T3 ``constant-benign`` and (s < 1) ``constant-capacity``;
    T5 ``constant-benign``.
    """
    kps = kappa1_sq * kappa2_sq
    if theorem is None:
        theorem = "T1" if schedule.kind is StepKind.POLYNOMIAL else "T5"
    scale = 1.0 if schedule.kind is StepKind.POLYNOMIAL else schedule.horizon**schedule.mu
    caps: list[tuple[str, float]] = [("step-contraction", scale / (kps + lam))]
    mu = schedule.mu
    if theorem in ("T1", "T4", "unregularized-baseline"):
        caps.append(("series-benign", bounds.series_caps(mu, c, kps).cap_benign))
    elif theorem == "T2":
        if s is None or trace_TKs is None:
            raise InvalidArgument("T2 caps need s and Tr(T_K^s)")
        caps.append(("unit-contraction", 1.0 / (1 + kps)))
        caps.append(("series-capacity", bounds.series_caps(mu, c, kps, s, trace_TKs).cap_capacity))
    elif theorem in ("T3", "T5"):
        cap2, cap2_star = bounds.constant_step_caps(mu, c, kps, s if theorem == "T3" else None, trace_TKs)
        caps.append(("constant-benign", cap2))
        if cap2_star is not None:
            caps.append(("constant-capacity", cap2_star))
    else:
        raise InvalidArgument(f"unknown theorem tag {theorem!r}")
    v = schedule.gamma
    checks = tuple(Check(name, cap, v <= cap * (1 + 1e-12)) for name, cap in caps)
    return AdmissibilityReport(v, checks)


def instance_admissibility(
    instance: ModelInstance, schedule: StepSchedule, lam: float, theorem: str | None, s: float | None
) -> AdmissibilityReport:
    tr = trace_power(instance.TK_dec, s) if s is not None else None
    return admissibility_check(
        schedule, lam, instance.kappa1_sq, instance.kappa2_sq, instance.kurtosis_c, s, theorem=theorem, trace_TKs=tr
    )
