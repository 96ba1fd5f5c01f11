"""Functional linear model: operators, ground-truth slopes and sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import IllPosedSource, InvalidArgument
from .grid import DiscreteFunction, Grid, check_same_grid, l2_norm
from .kernels import KernelSpec, cosine_basis, diagonal_sup
from .operators import (
    DEFAULT_CUTOFF,
    DiscreteOperator,
    SpectralDecomposition,
    assemble,
    compose_TC,
    compose_TK,
    decompose,
    pinv_apply,
    retained_mask,
)

PROJECTION_LIMIT = 0.01
RESIDUAL_TOL = 1e-6


class SourceKind(str, Enum):
    PREDICTION = "prediction"  # L_C^{1/2} beta* = T_K^theta g
    ESTIMATION = "estimation"  # beta* = L_K^{1/2} T_C^r g


@dataclass(frozen=True, eq=False)
class SourceCondition:
    kind: SourceKind
    exponent: float
    seed_function: DiscreteFunction
    coefficient_profile: np.ndarray | None = None
    norm: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SourceKind(self.kind))
        if not 0 < self.exponent <= 1:
            raise InvalidArgument(f"source exponent must lie in (0, 1], got {self.exponent}")
        object.__setattr__(self, "norm", l2_norm(self.seed_function))


@dataclass(frozen=True, eq=False)
class Operators:
    """L_K, L_C, T_K, T_C with their eigensystems and the diagonal bounds kappa_1^2, kappa_2^2."""

    LK: DiscreteOperator
    LC: DiscreteOperator
    LK_dec: SpectralDecomposition
    LC_dec: SpectralDecomposition
    TK: DiscreteOperator
    TC: DiscreteOperator
    TK_dec: SpectralDecomposition
    TC_dec: SpectralDecomposition
    kappa1_sq: float
    kappa2_sq: float
    K_spec: KernelSpec | None = None
    C_spec: KernelSpec | None = None

    @property
    def grid(self) -> Grid:
        return self.LK.grid

    @property
    def kappa_product_sq(self) -> float:
        return self.kappa1_sq * self.kappa2_sq


def build_operators(K_spec: KernelSpec, C_spec: KernelSpec, grid: Grid) -> Operators:
    LK, LC = assemble(K_spec, grid), assemble(C_spec, grid)
    LK_dec, LC_dec = decompose(LK), decompose(LC)
    TK, TC = compose_TK(LK, LC_dec), compose_TC(LC, LK_dec)
    return Operators(
        LK, LC, LK_dec, LC_dec, TK, TC, decompose(TK), decompose(TC),
        diagonal_sup(K_spec, grid), diagonal_sup(C_spec, grid), K_spec, C_spec,
    )


@dataclass(frozen=True, eq=False)
class ModelInstance:
    ops: Operators
    beta_star: DiscreteFunction
    noise_sigma: float
    kurtosis_c: float = 3.0
    rel_cutoff: float = DEFAULT_CUTOFF
    sources: tuple[SourceCondition, ...] = ()

    def __post_init__(self) -> None:
        check_same_grid(self.ops.LK, self.beta_star)
        if not np.isfinite(self.noise_sigma) or self.noise_sigma < 0:
            raise InvalidArgument("noise_sigma must be finite and nonnegative")
        if self.kurtosis_c < 1:
            raise InvalidArgument("kurtosis constant must be >= 1")
        m = self.grid.size
        lam = self.ops.LC_dec.eigenvalues
        pos = lam > 0
        # X = xi @ kl_basis.T with xi standard normal
        object.__setattr__(self, "kl_basis", self.ops.LC_dec.vectors[:, pos] * np.sqrt(lam[pos]))
        object.__setattr__(self, "LKLC", self.ops.LK.matrix @ self.ops.LC.matrix)
        assert self.LKLC.shape == (m, m)

    def __getattr__(self, name):
        # convenience passthrough to the operator bundle
        if name in {"LK", "LC", "LK_dec", "LC_dec", "TK", "TC", "TK_dec", "TC_dec", "kappa1_sq", "kappa2_sq"}:
            return getattr(self.ops, name)
        raise AttributeError(name)

    @property
    def grid(self) -> Grid:
        return self.ops.grid

    def source(self, kind: SourceKind | str) -> SourceCondition | None:
        kind = SourceKind(kind)
        for s in self.sources:
            if s.kind is kind:
                return s
        return None

    def with_sources(self, *sources: SourceCondition) -> ModelInstance:
        return ModelInstance(self.ops, self.beta_star, self.noise_sigma, self.kurtosis_c, self.rel_cutoff, tuple(sources))


@dataclass(frozen=True, eq=False)
class BetaStar:
    beta_star: DiscreteFunction
    seed_function: DiscreteFunction  # effective (projected) g
    seed_norm: float
    residual: float
    discarded_fraction: float


def make_beta_star_prediction(
    theta: float,
    g_star: DiscreteFunction,
    TK_dec: SpectralDecomposition,
    LC_dec: SpectralDecomposition,
    rel_cutoff: float = DEFAULT_CUTOFF,
) -> BetaStar:
    """Solve L_C^{1/2} beta = T_K^theta g after projecting g onto the resolvable T_K eigenspace."""
    if not 0 < theta <= 1:
        raise InvalidArgument("theta must lie in (0, 1]")
    check_same_grid(g_star, TK_dec, LC_dec)
    coef = TK_dec.coefficients(g_star.values)
    keep = retained_mask(TK_dec, rel_cutoff)
    total = float(np.sum(coef**2))
    dropped = float(np.sum(coef[~keep] ** 2)) / total if total > 0 else 0.0
    if dropped > PROJECTION_LIMIT:
        raise IllPosedSource(
            f"{dropped:.3g} of g's energy lies outside the resolvable range; "
            "prescribe eigen-coefficients in a commuting model instead"
        )
    coef = np.where(keep, coef, 0.0)
    g_eff = DiscreteFunction(TK_dec.synthesize(coef), TK_dec.grid)
    target = TK_dec.synthesize(coef * TK_dec.power(theta).eigenvalues)
    half = LC_dec.power(0.5)
    beta = pinv_apply(half, DiscreteFunction(target, TK_dec.grid), rel_cutoff).function
    resid = np.sqrt(np.sum(TK_dec.grid.weights * (half.apply(beta).values - target) ** 2))
    scale = np.sqrt(np.sum(TK_dec.grid.weights * target**2))
    rel = float(resid / scale) if scale > 0 else float(resid)
    if rel > RESIDUAL_TOL:
        raise IllPosedSource(f"source residual {rel:.3g} exceeds {RESIDUAL_TOL}")
    return BetaStar(beta, g_eff, l2_norm(g_eff), rel, dropped)


def make_beta_star_estimation(
    r: float, g_star: DiscreteFunction, LK_dec: SpectralDecomposition, TC_dec: SpectralDecomposition
) -> DiscreteFunction:
    """beta* = L_K^{1/2} T_C^r g, forward maps only."""
    if not 0 < r <= 1:
        raise InvalidArgument("r must lie in (0, 1]")
    inner = TC_dec.power(r).apply(g_star)
    return LK_dec.power(0.5).apply(inner)


def infer_source(
    ops: Operators,
    beta_star: DiscreteFunction,
    kind: SourceKind | str,
    exponent: float,
    rel_cutoff: float = DEFAULT_CUTOFF,
) -> SourceCondition:
    """Recover the seed function g of a source condition from a given slope."""
    kind = SourceKind(kind)
    if kind is SourceKind.PREDICTION:
        h = ops.LC_dec.power(0.5).apply(beta_star)
        g = pinv_apply(ops.TK_dec.power(exponent), h, rel_cutoff).function
    else:
        h = pinv_apply(ops.LK_dec.power(0.5), beta_star, rel_cutoff).function
        g = pinv_apply(ops.TC_dec.power(exponent), h, rel_cutoff).function
    return SourceCondition(kind, exponent, g)


@dataclass(frozen=True)
class CommutingProfile:
    """Cosine-series K and C sharing the basis sqrt(2) cos(l pi t), l = 1..length."""

    p_K: float
    p_C: float
    length: int

    def K_spec(self) -> KernelSpec:
        return KernelSpec.cosine_series(self.p_K, self.length)

    def C_spec(self) -> KernelSpec:
        return KernelSpec.cosine_series(self.p_C, self.length)

    def spectra(self) -> tuple[np.ndarray, np.ndarray]:
        ell = np.arange(1, self.length + 1, dtype=float)
        return ell ** (-self.p_K), ell ** (-self.p_C)

    def slope_coefficients(self, kind: SourceKind | str, exponent: float, g: np.ndarray) -> np.ndarray:
        k, c = self.spectra()
        if SourceKind(kind) is SourceKind.PREDICTION:
            return (k * c) ** exponent * g / np.sqrt(c)
        return np.sqrt(k) * (k * c) ** exponent * g

    def seed_coefficients(self, kind: SourceKind | str, exponent: float, b: np.ndarray) -> np.ndarray:
        k, c = self.spectra()
        if SourceKind(kind) is SourceKind.PREDICTION:
            return b * np.sqrt(c) / (k * c) ** exponent
        return b / (np.sqrt(k) * (k * c) ** exponent)


def commuting_instance(
    grid: Grid,
    profile: CommutingProfile,
    kind: SourceKind | str,
    exponent: float,
    g_coef: np.ndarray,
    noise_sigma: float,
    *,
    extra_sources: dict[SourceKind | str, float] | None = None,
    rel_cutoff: float = DEFAULT_CUTOFF,
    ops: Operators | None = None,
) -> ModelInstance:
    """Place beta* exactly by its eigen-coefficients so the source condition holds in closed form.

    ``extra_sources`` maps a second source kind to its exponent; its seed is derived analytically.
    """
    if profile.length >= grid.size - 1:
        raise InvalidArgument("series length must be below grid size - 1 for exact discrete orthogonality")
    g_coef = np.asarray(g_coef, dtype=float)
    if g_coef.shape != (profile.length,):
        raise InvalidArgument(f"need {profile.length} seed coefficients")
    if ops is None:
        ops = build_operators(profile.K_spec(), profile.C_spec(), grid)
    basis = cosine_basis(grid.nodes, profile.length)
    b = profile.slope_coefficients(kind, exponent, g_coef)
    beta = DiscreteFunction(basis @ b, grid)
    sources = [SourceCondition(kind, exponent, DiscreteFunction(basis @ g_coef, grid), g_coef)]
    for other, e in (extra_sources or {}).items():
        g2 = profile.seed_coefficients(other, e, b)
        sources.append(SourceCondition(other, e, DiscreteFunction(basis @ g2, grid), g2))
    return ModelInstance(ops, beta, noise_sigma, 3.0, rel_cutoff, tuple(sources))


def sample_X_values(LC_dec: SpectralDecomposition, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    lam = LC_dec.eigenvalues
    pos = lam > 0
    basis = LC_dec.vectors[:, pos] * np.sqrt(lam[pos])
    xi = rng.standard_normal(pos.sum() if size is None else (size, pos.sum()))
    return xi @ basis.T


def sample_X(LC_dec: SpectralDecomposition, rng: np.random.Generator) -> DiscreteFunction:
    """Gaussian predictor via its Karhunen-Loeve expansion."""
    return DiscreteFunction(sample_X_values(LC_dec, rng), LC_dec.grid)


def sample_pair(instance: ModelInstance, rng: np.random.Generator) -> tuple[DiscreteFunction, float]:
    x = rng.standard_normal(instance.kl_basis.shape[1]) @ instance.kl_basis.T
    y = float(np.dot(instance.grid.weights * instance.beta_star.values, x))
    y += instance.noise_sigma * rng.standard_normal()
    return DiscreteFunction(x, instance.grid), y


def beta_lambda(instance: ModelInstance, lam: float) -> DiscreteFunction:
    """Population Tikhonov solution of (lam I + L_K L_C) beta = L_K L_C beta*."""
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    A = instance.LKLC
    rhs = A @ instance.beta_star.values
    sol = np.linalg.solve(A + lam * np.eye(A.shape[0]), rhs)
    return DiscreteFunction(sol, instance.grid)


def f_lambda(instance: ModelInstance, lam: float) -> DiscreteFunction:
    """(lam I + T_C)^{-1} L_K^{1/2} L_C beta*."""
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    ops = instance.ops
    h = ops.LK_dec.power(0.5).apply(ops.LC.apply(instance.beta_star))
    dec = ops.TC_dec
    coef = dec.coefficients(h.values) / (dec.eigenvalues + lam)
    return DiscreteFunction(dec.synthesize(coef), instance.grid)

