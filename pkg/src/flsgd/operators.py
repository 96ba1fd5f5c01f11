"""Integral operators on a grid and their spectral calculus.

An operator is stored as the matrix ``A`` acting on nodal values, so that
``(A f)_i = sum_j K(t_i, t_j) w_j f_j``. Operators built from symmetric kernels
are self-adjoint in the weighted inner product; their eigenproblem is solved on
the similar symmetric matrix ``W^{1/2} A W^{-1/2}``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InvalidArgument, StepSizeTooLarge, UnsupportedOperator
from .grid import DiscreteFunction, Grid, check_same_grid
from .kernels import KernelSpec, gram

NEGATIVE_TOL = 1e-8
DEFAULT_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    matrix: np.ndarray
    grid: Grid
    self_adjoint: bool = False

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=float)
        if mat.shape != (self.grid.size, self.grid.size):
            raise GridMismatch(f"operator shape {mat.shape} does not match grid {self.grid.token}")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    def apply(self, f: DiscreteFunction) -> DiscreteFunction:
        check_same_grid(self, f)
        return DiscreteFunction(self.matrix @ f.values, self.grid)

    def __call__(self, f: DiscreteFunction) -> DiscreteFunction:
        return self.apply(f)

    def __matmul__(self, other: DiscreteOperator) -> DiscreteOperator:
        check_same_grid(self, other)
        return DiscreteOperator(self.matrix @ other.matrix, self.grid, False)

    def symmetric_form(self) -> np.ndarray:
        """W^{1/2} A W^{-1/2}, symmetric when the operator is self-adjoint."""
        r = np.sqrt(self.grid.weights)
        return r[:, None] * self.matrix / r[None, :]


def identity(grid: Grid) -> DiscreteOperator:
    return DiscreteOperator(np.eye(grid.size), grid, True)


def assemble(spec: KernelSpec, grid: Grid) -> DiscreteOperator:
    K = gram(spec, grid.nodes, grid.nodes)
    return DiscreteOperator(K * grid.weights[None, :], grid, True)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs in nonincreasing order; ``vectors[:, l]`` holds the nodal values of phi_l."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    grid: Grid
    n_clamped: int = 0

    @property
    def grid_id(self) -> str:
        return self.grid.token

    @property
    def eigenfunctions(self) -> list[DiscreteFunction]:
        return [DiscreteFunction(self.vectors[:, i], self.grid) for i in range(self.vectors.shape[1])]

    @property
    def top(self) -> float:
        return float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """<f, phi_l> for nodal values of shape (m,) or (batch, m)."""
        return (np.asarray(values) * self.grid.weights) @ self.vectors

    def synthesize(self, coef: np.ndarray) -> np.ndarray:
        return np.asarray(coef) @ self.vectors.T

    def map(self, fn) -> SpectralDecomposition:
        """Same eigenfunctions, eigenvalues replaced by fn(eigenvalues) (order not re-sorted)."""
        return SpectralDecomposition(fn(self.eigenvalues), self.vectors, self.grid, self.n_clamped)

    def power(self, exponent: float) -> SpectralDecomposition:
        if exponent < 0:
            raise InvalidArgument("negative exponents are handled by pinv_apply")
        lam = self.eigenvalues
        if exponent == 0:
            out = (lam > 0).astype(float)  # 0^0 := 0, i.e. projector onto the range
        else:
            out = lam**exponent
        return SpectralDecomposition(out, self.vectors, self.grid, self.n_clamped)

    def to_operator(self) -> DiscreteOperator:
        mat = (self.vectors * self.eigenvalues) @ (self.vectors.T * self.grid.weights)
        return DiscreteOperator(mat, self.grid, True)

    def apply(self, f: DiscreteFunction) -> DiscreteFunction:
        check_same_grid(self, f)
        return DiscreteFunction(self.synthesize(self.coefficients(f.values) * self.eigenvalues), self.grid)


def decompose(op: DiscreteOperator) -> SpectralDecomposition:
    if not op.self_adjoint:
        raise UnsupportedOperator("decompose requires a self-adjoint operator")
    S = op.symmetric_form()
    S = (S + S.T) / 2
    lam, U = np.linalg.eigh(S)
    order = np.argsort(lam)[::-1]
    lam, U = lam[order], U[:, order]
    lam_max = max(float(lam[0]), 0.0)
    bad = int(np.sum(lam < -NEGATIVE_TOL * lam_max)) if lam_max > 0 else int(np.sum(lam < 0))
    if bad:
        warnings.warn(f"{bad} eigenvalue(s) below -{NEGATIVE_TOL}*lambda_max clamped to 0", RuntimeWarning)
    # eigh resolves eigenvalues only to about m * eps * lambda_max; below that they are noise
    floor = op.grid.size * np.finfo(float).eps * lam_max
    lam = np.where(lam > floor, lam, 0.0)
    vectors = U / np.sqrt(op.grid.weights)[:, None]
    return SpectralDecomposition(lam, vectors, op.grid, bad)


def fractional_power(dec: SpectralDecomposition, exponent: float) -> DiscreteOperator:
    return dec.power(exponent).to_operator()


def compose_TK(LK: DiscreteOperator, LC_dec: SpectralDecomposition) -> DiscreteOperator:
    """L_C^{1/2} L_K L_C^{1/2}."""
    check_same_grid(LK, LC_dec)
    half = fractional_power(LC_dec, 0.5)
    return DiscreteOperator(half.matrix @ LK.matrix @ half.matrix, LK.grid, True)


def compose_TC(LC: DiscreteOperator, LK_dec: SpectralDecomposition) -> DiscreteOperator:
    """L_K^{1/2} L_C L_K^{1/2}."""
    return compose_TK(LC, LK_dec)


def trace_power(dec: SpectralDecomposition, s: float) -> float:
    if not 0 < s <= 1:
        raise InvalidArgument(f"trace exponent must lie in (0, 1], got {s}")
    lam = dec.eigenvalues
    return float(np.sum(lam[lam > 0] ** s))


def operator_norm(op: DiscreteOperator) -> float:
    """Norm induced by the weighted inner product."""
    return float(np.linalg.norm(op.symmetric_form(), 2))


def omega_eigenvalues(
    eigenvalues: np.ndarray, gammas: np.ndarray, lam: float, *, offset: int = 1
) -> np.ndarray:
    """prod_j (1 - gamma_j (lambda_l + lam)) for each eigenvalue; ``offset`` labels gammas[0] in errors."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if gammas.size == 0:
        return np.ones_like(eigenvalues)
    top = float(eigenvalues.max()) + lam if eigenvalues.size else lam
    viol = np.nonzero(gammas * top > 1 + 1e-12)[0]
    if viol.size:
        j = int(viol[0]) + offset
        raise StepSizeTooLarge(f"gamma_{j} * (lambda_max + lambda) = {gammas[viol[0]] * top:.6g} > 1", j=j)
    factors = 1.0 - np.multiply.outer(gammas, eigenvalues + lam)
    return np.prod(factors, axis=0)


def omega_product(dec: SpectralDecomposition, gammas, lam: float, *, offset: int = 1) -> DiscreteOperator:
    """Spectral realization of prod_j (I - gamma_j (A + lam I))."""
    eig = omega_eigenvalues(dec.eigenvalues, gammas, lam, offset=offset)
    # The product acts as the identity on the kernel of A only when lam = 0; keep the full basis.
    return SpectralDecomposition(eig, dec.vectors, dec.grid).to_operator()


@dataclass(frozen=True)
class PinvResult:
    function: DiscreteFunction
    discarded_energy: float
    discarded_fraction: float


def retained_mask(dec: SpectralDecomposition, rel_cutoff: float = DEFAULT_CUTOFF) -> np.ndarray:
    return dec.eigenvalues > rel_cutoff * dec.top if dec.top > 0 else np.zeros(dec.eigenvalues.size, bool)


def pinv_apply(
    dec: SpectralDecomposition, f: DiscreteFunction, rel_cutoff: float = DEFAULT_CUTOFF
) -> PinvResult:
    if not 0 < rel_cutoff < 1:
        raise InvalidArgument("rel_cutoff must lie in (0, 1)")
    check_same_grid(dec, f)
    coef = dec.coefficients(f.values)
    keep = retained_mask(dec, rel_cutoff)
    inv = np.zeros_like(coef)
    inv[keep] = coef[keep] / dec.eigenvalues[keep]
    total = float(np.sum(coef**2))
    dropped = float(np.sum(coef[~keep] ** 2))
    frac = dropped / total if total > 0 else 0.0
    return PinvResult(DiscreteFunction(dec.synthesize(inv), dec.grid), dropped, frac)
