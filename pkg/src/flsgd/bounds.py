"""Closed-form bounds and constants from the convergence analysis.

Naming:
    contraction_norm_bound  -- bound on ||A^alpha prod_j (I - gamma_j (A + lam I))||^2
    step_series             -- sum_i gamma_i^2 exp(-lam S_i) / (1 + S_i^nu), S_i = sum_{j>i} gamma_j
    step_series_bound       -- the five-branch closed-form majorant of step_series
    series_caps             -- step-size caps that keep step_series below the uniform-bound thresholds
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidArgument, StepSizeTooLarge, UnsupportedBranch
from .model import ModelInstance, beta_lambda, f_lambda
from .metrics import k_norm_sq
from .operators import omega_eigenvalues, trace_power

E = math.e


# --------------------------------------------------------------------------- contraction bound


def contraction_norm_bound(alpha: float, C_star: float, gammas, lam: float) -> float:
    """[(alpha/e)^{2 alpha} + C*^{2 alpha}] / [exp(lam G)(1 + G^{2 alpha})], G = sum(gammas)."""
    if alpha <= 0:
        raise InvalidArgument("alpha must be positive")
    g = np.asarray(gammas, dtype=float)
    if g.size and np.any(g * (C_star + lam) > 1 + 1e-12):
        raise InvalidArgument("gamma_j (C* + lambda) <= 1 violated")
    G = float(g.sum())
    num = (alpha / E) ** (2 * alpha) + C_star ** (2 * alpha)
    return num / (math.exp(lam * G) * (1.0 + G ** (2 * alpha)))


def contraction_norm_sq(eigenvalues, alpha: float, gammas, lam: float) -> float:
    """max_l (a_l^alpha prod_j (1 - gamma_j (a_l + lam)))^2 for a diagonal operator."""
    a = np.asarray(eigenvalues, dtype=float)
    prod = omega_eigenvalues(a, gammas, lam)
    return float(np.max((a**alpha * prod) ** 2))


# --------------------------------------------------------------------------- step series


def tail_sums(gammas: np.ndarray) -> np.ndarray:
    """S_i = sum_{j > i} gamma_j."""
    g = np.asarray(gammas, dtype=float)
    return np.cumsum(g[::-1])[::-1] - g


def weighted_series(gammas, lam: float, nu: float) -> float:
    """sum_i gamma_i^2 exp(-lam S_i) / (1 + S_i^nu); nu = 0 drops the denominator entirely."""
    g = np.asarray(gammas, dtype=float)
    if g.size == 0:
        return 0.0
    S = tail_sums(g)
    denom = 1.0 if nu == 0 else 1.0 + S**nu
    return float(np.sum(g**2 * np.exp(-lam * S) / denom))


@dataclass(frozen=True)
class SeriesCase:
    nu: float
    mu: float
    gamma1: float
    lam: float
    k: int

    def __post_init__(self) -> None:
        if self.nu < 0:
            raise InvalidArgument("nu must be nonnegative")
        if not 0 < self.mu < 1:
            raise InvalidArgument("mu must lie in (0, 1)")
        if not 0 < self.gamma1 < 1:
            raise InvalidArgument("gamma1 must lie in (0, 1)")
        if self.lam < 0:
            raise InvalidArgument("lambda must be nonnegative")
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgument("k must be a positive integer")

    def gammas(self) -> np.ndarray:
        return self.gamma1 * np.arange(1, int(self.k) + 1, dtype=float) ** (-self.mu)


def step_series(case: SeriesCase) -> float:
    """Direct summation of the step series for gamma_i = gamma1 i^{-mu}."""
    return weighted_series(case.gammas(), case.lam, case.nu)


class Branch(str, Enum):
    NU_ONE = "nu=1"
    NU_FRAC_MU_SMALL = "0<nu<1,mu<1/2"
    NU_FRAC_MU_LARGE = "0<nu<1,mu>=1/2"
    NU_ZERO = "nu=0,mu>1/2"
    NU_LARGE = "nu>1"


def select_branch(nu: float, mu: float) -> Branch:
    if nu == 1:
        return Branch.NU_ONE
    if 0 < nu < 1:
        return Branch.NU_FRAC_MU_SMALL if mu < 0.5 else Branch.NU_FRAC_MU_LARGE
    if nu == 0:
        if 0.5 < mu < 1:
            return Branch.NU_ZERO
        raise UnsupportedBranch(f"nu = 0 is only bounded for 1/2 < mu < 1 (got mu = {mu})")
    if nu > 1:
        return Branch.NU_LARGE
    raise UnsupportedBranch(f"no closed-form bound for nu = {nu}, mu = {mu}")


@dataclass(frozen=True)
class SeriesConstants:
    d_mu: float
    C_mu: float | None = None
    C_mu_1: float | None = None
    C_mu_2: float | None = None
    C_mu_hat: float | None = None
    C_mu_hat_1: float | None = None
    C_mu_hat_2: float | None = None
    C_mu_tilde: float | None = None
    C_mu_bar: float | None = None
    C_mu_bar_1: float | None = None


def d_mu(mu: float) -> float:
    return (1 - 2 ** (mu - 1)) / (1 - mu)


def series_constants(mu: float, nu: float, gamma1: float, *, saturate: bool = False) -> SeriesConstants:
    """Constants of the branch selected by (nu, mu).

    With ``saturate`` the gamma1-dependent minima take their large-gamma1 value
    (min{1-mu, gamma1} -> 1-mu, min{1, (gamma1/(1-mu))^nu} -> 1), which makes
    the constant independent of gamma1 so it can define a cap on gamma1.
    """
    branch = select_branch(nu, mu)
    d = d_mu(mu)
    half = mu == 0.5
    ratio_min = 1.0 if saturate else min(1.0, (gamma1 / (1 - mu)) ** nu)
    if branch is Branch.NU_ONE:
        c1 = 4.0 if half else 4.0 / (abs(2 * mu - 1) * (1 - 2 ** (mu - 1)))
        m = (1 - mu) if saturate else min(1 - mu, gamma1)
        c2 = 18.0 / m * (1 - mu + math.log(2 - 2 ** (mu - 1)))
        return SeriesConstants(d, C_mu=1 + c1 + c2, C_mu_1=c1, C_mu_2=c2)
    if branch in (Branch.NU_FRAC_MU_SMALL, Branch.NU_FRAC_MU_LARGE):
        c1 = 2 ** (1 + nu) if half else 2.0 / (abs(2 * mu - 1) * d**nu)
        c2 = 18.0 / ratio_min * (1 - 2 ** (mu - 1)) ** (1 - nu) / ((1 - mu) * (1 - nu))
        return SeriesConstants(d, C_mu_hat=1 + c1 + c2, C_mu_hat_1=c1, C_mu_hat_2=c2)
    if branch is Branch.NU_ZERO:
        return SeriesConstants(d, C_mu_tilde=1 + 2.0 / (2 * mu - 1) + 18.0 * d)
    if half:
        c1 = (E / 2) ** ((nu - 3) / 2) / ((nu - 1) * d**nu)
    else:
        c1 = 2.0 / (abs(2 * mu - 1) * d**nu)
    cbar = 1 + c1 + 18.0 / ratio_min * nu / ((1 - mu) * (nu - 1))
    return SeriesConstants(d, C_mu_bar=cbar, C_mu_bar_1=c1)


@dataclass(frozen=True)
class SeriesBound:
    bound: float
    constants: SeriesConstants
    branch: Branch


def step_series_bound(case: SeriesCase) -> SeriesBound:
    if not case.lam > 0:
        raise InvalidArgument("lambda must be positive for the closed-form bound")
    nu, mu, g1, lam, k = case.nu, case.mu, case.gamma1, case.lam, float(case.k)
    const = series_constants(mu, nu, g1)
    branch = select_branch(nu, mu)
    d = const.d_mu
    decay = math.exp(-lam * g1 * d * k ** (1 - mu))
    log_k = math.log(k + 1)
    if branch is Branch.NU_ONE:
        val = const.C_mu * g1 * (decay * k ** (-min(mu, 1 - mu)) + k ** (-mu)) * log_k
    elif branch is Branch.NU_FRAC_MU_SMALL:
        val = const.C_mu_hat * g1 * (k + 1) ** (-mu + (1 - mu) * (1 - nu))
    elif branch is Branch.NU_FRAC_MU_LARGE:
        val = const.C_mu_hat * g1 * (
            (k + 1) ** (-mu + (1 - mu) * (1 - nu)) + decay * k ** (-nu * (1 - mu)) * log_k
        )
    elif branch is Branch.NU_ZERO:
        val = const.C_mu_tilde * g1 * (decay + k ** (1 - 2 * mu))
    else:
        val = const.C_mu_bar * g1 * (decay * k ** (-min(mu, nu * (1 - mu))) + k ** (-mu))
    return SeriesBound(val, const, branch)


# --------------------------------------------------------------------------- step-size caps


def capacity_factor(s: float, kappa_product_sq: float) -> float:
    """((2-s)/(2e))^{2-s} + (kappa1 kappa2)^{4-2s}."""
    return ((2 - s) / (2 * E)) ** (2 - s) + kappa_product_sq ** (2 - s)


@dataclass(frozen=True)
class SeriesCaps:
    cap_benign: float
    cap_capacity: float | None = None


def series_caps(
    mu: float,
    c: float,
    kappa_product_sq: float,
    s: float | None = None,
    trace_TKs: float | None = None,
) -> SeriesCaps:
    """gamma1 caps for polynomial steps (benign series and, given s and Tr(T_K^s), capacity series)."""
    C_mu = series_constants(mu, 1.0, 0.5, saturate=True).C_mu
    cap1 = 1.0 / (4 * C_mu * (1 + c) * (1 + kappa_product_sq) ** 2 * (math.log(2) + 1 / min(mu, 1 - mu)))
    capS = None
    if s is not None and trace_TKs is not None:
        if not 0 < s < 1:
            raise InvalidArgument("capacity cap needs s in (0, 1)")
        C_bar = series_constants(mu, 2 - s, 0.5, saturate=True).C_mu_bar
        capS = 1.0 / (
            4 * (math.sqrt(c) + c) * C_bar * trace_TKs * capacity_factor(s, kappa_product_sq)
        )
    return SeriesCaps(cap1, capS)


def benign_series_target(c: float, kappa_product_sq: float) -> float:
    return 1.0 / (2 * (1 + kappa_product_sq) ** 2 * (1 + c))


def capacity_series_target(c: float, kappa_product_sq: float, s: float, trace_TKs: float) -> float:
    return 1.0 / (2 * (math.sqrt(c) + c) * trace_TKs * capacity_factor(s, kappa_product_sq))


def constant_step_caps(
    mu: float, c: float, kappa_product_sq: float, s: float | None = None, trace_TKs: float | None = None
) -> tuple[float, float | None]:
    """gamma0 caps for constant steps gamma0 n^{-mu}: the benign one and, for s < 1, the capacity one."""
    cap2 = 1.0 / (2 * (1 + c) * (1 + kappa_product_sq) ** 2 * (1 + 1 / mu))
    cap2_star = None
    if s is not None and s < 1 and trace_TKs is not None:
        cap2_star = 1.0 / (
            2 * (math.sqrt(c) + c) * trace_TKs * capacity_factor(s, kappa_product_sq) * (2 + 1 / (1 - s))
        )
    return cap2, cap2_star


# --------------------------------------------------------------------------- error decompositions


def uniform_bound(instance: ModelInstance) -> float:
    """8 kappa2^2 ||beta*||^2 + sigma^2."""
    b = instance.beta_star.values
    norm_sq = float(np.dot(instance.grid.weights * b, b))
    return 8 * instance.kappa2_sq * norm_sq + instance.noise_sigma**2


@dataclass(frozen=True)
class BoundTerms:
    approx: float
    sample: float

    @property
    def total(self) -> float:
        return self.approx + self.sample


def _checked_gammas(instance: ModelInstance, gammas, lam: float) -> np.ndarray:
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    g = np.asarray(gammas, dtype=float)
    bad = np.nonzero(g * (instance.ops.kappa_product_sq + lam) > 1 + 1e-12)[0]
    if bad.size:
        raise StepSizeTooLarge("gamma_k (kappa1^2 kappa2^2 + lambda) <= 1 violated", j=int(bad[0]) + 1)
    return g


def _series_terms(g: np.ndarray, lam: float, nu: float) -> np.ndarray:
    S = tail_sums(g)
    denom = 1.0 if nu == 0 else 1.0 + S**nu
    return g**2 * np.exp(-lam * S) / denom


def _source_approx(norm_g: float, exponent: float, kps: float, G: float, lam: float) -> float:
    a = 2 * norm_g**2 * ((exponent / E) ** (2 * exponent) + kps ** (2 * exponent))
    a /= math.exp(lam * G) * (1 + G ** (2 * exponent))
    return a + 2 * lam ** (2 * exponent) * norm_g**2


def _mode(mode: str, s: float | None) -> str:
    if mode not in ("benign", "capacity"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    if mode == "capacity" and (s is None or not 0 < s < 1):
        raise InvalidArgument("capacity mode needs s in (0, 1)")
    return mode


def prediction_bound(
    instance: ModelInstance,
    gammas,
    lam: float,
    *,
    mode: str = "benign",
    s: float | None = None,
    form: str = "operator",
) -> BoundTerms:
    """Bound on the expected excess prediction error after len(gammas) updates.

    ``form="operator"`` evaluates the approximation term through beta_lambda and the
    contraction product; ``form="source"`` uses the source-condition specialization.
    """
    mode = _mode(mode, s)
    g = _checked_gammas(instance, gammas, lam)
    ops = instance.ops
    kps = ops.kappa_product_sq
    if form == "operator":
        bl = beta_lambda(instance, lam)
        dec = ops.TK_dec
        v = ops.LC_dec.power(0.5).apply(bl)
        coef = dec.coefficients(v.values) * omega_eigenvalues(dec.eigenvalues, g, lam)
        first = math.sqrt(float(np.sum(coef**2)))
        d = bl.values - instance.beta_star.values
        second = math.sqrt(max(float(np.dot(instance.grid.weights * d, ops.LC.matrix @ d)), 0.0))
        approx = (first + second) ** 2
    elif form == "source":
        src = instance.source("prediction")
        if src is None:
            raise InvalidArgument("instance carries no prediction source condition")
        approx = _source_approx(src.norm, src.exponent, kps, float(g.sum()), lam)
    else:
        raise InvalidArgument(f"unknown form {form!r}")
    noise = instance.noise_sigma**2 + uniform_bound(instance)
    if mode == "benign":
        sample = (1 + kps) ** 2 * (1 + instance.kurtosis_c) * noise * float(np.sum(_series_terms(g, lam, 1.0)))
    else:
        c = instance.kurtosis_c
        tr = trace_power(ops.TK_dec, s)
        sample = (math.sqrt(c) + c) * tr * noise * capacity_factor(s, kps) * float(
            np.sum(_series_terms(g, lam, 2 - s))
        )
    return BoundTerms(approx, sample)


def _k_norm(instance: ModelInstance, values: np.ndarray) -> float:
    v, _ = k_norm_sq(values, instance.LK_dec, instance.rel_cutoff)
    return math.sqrt(float(v[0]))


def estimation_bound(
    instance: ModelInstance,
    gammas,
    lam: float,
    *,
    mode: str = "benign",
    s: float | None = None,
    form: str = "operator",
) -> BoundTerms:
    """Bound on the expected squared RKHS-norm error after len(gammas) updates."""
    mode = _mode(mode, s)
    g = _checked_gammas(instance, gammas, lam)
    ops = instance.ops
    kps = ops.kappa_product_sq
    if form == "operator":
        fl = f_lambda(instance, lam)
        dec = ops.TC_dec
        # omega(L_K L_C + lam) L_K^{1/2} = L_K^{1/2} omega(T_C + lam), and ||L_K^{1/2} h||_K = ||h||_2
        coef = dec.coefficients(fl.values) * omega_eigenvalues(dec.eigenvalues, g, lam)
        first = math.sqrt(float(np.sum(coef**2)))
        diff = ops.LK_dec.power(0.5).apply(fl).values - instance.beta_star.values
        second = _k_norm(instance, diff)
        approx = (first + second) ** 2
    elif form == "source":
        src = instance.source("estimation")
        if src is None:
            raise InvalidArgument("instance carries no estimation source condition")
        approx = _source_approx(src.norm, src.exponent, kps, float(g.sum()), lam)
    else:
        raise InvalidArgument(f"unknown form {form!r}")
    sig2 = instance.noise_sigma**2
    U = uniform_bound(instance)
    c = instance.kurtosis_c
    if mode == "benign":
        sample = kps * (1 + c) * (sig2 + U) * float(np.sum(_series_terms(g, lam, 0.0)))
    else:
        tr = trace_power(ops.TC_dec, s)
        factor = ((1 - s) / (2 * E)) ** (1 - s) + kps ** (1 - s)
        sample = math.sqrt(c) * tr * (sig2 + math.sqrt(c) * U) * factor * float(
            np.sum(_series_terms(g, lam, 1 - s))
        )
    return BoundTerms(approx, sample)


def decomposition_rhs_prediction(instance, schedule, plan, k: int, mode="benign", s=None, form="operator"):
    """``schedule`` exposes gammas(k); ``plan`` exposes lam."""
    return prediction_bound(instance, schedule.gammas(k), plan.lam, mode=mode, s=s, form=form)


def decomposition_rhs_estimation(instance, schedule, plan, k: int, mode="benign", s=None, form="operator"):
    return estimation_bound(instance, schedule.gammas(k), plan.lam, mode=mode, s=s, form=form)
