"""Excess prediction error and RKHS-norm estimation error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .grid import DiscreteFunction, check_same_grid
from .model import ModelInstance
from .operators import SpectralDecomposition, retained_mask


@dataclass(frozen=True)
class ErrorRecord:
    k: int
    pred_error: float
    est_error_K: float | None = None
    discarded_energy: float = 0.0


def prediction_errors(betas: np.ndarray, instance: ModelInstance) -> np.ndarray:
    """<d, L_C d> for each row d = beta - beta*."""
    d = np.atleast_2d(betas) - instance.beta_star.values
    Cd = d @ instance.LC.matrix.T
    return np.maximum(np.einsum("ij,ij->i", d * instance.grid.weights, Cd), 0.0)


def k_norm_sq(
    values: np.ndarray, dec: SpectralDecomposition, rel_cutoff: float
) -> tuple[np.ndarray, np.ndarray]:
    """sum over retained modes of <f, phi_l>^2 / lambda_l, plus the L2 energy of dropped modes."""
    keep = retained_mask(dec, rel_cutoff)
    coef = dec.coefficients(np.atleast_2d(values))
    value = np.sum(coef[:, keep] ** 2 / dec.eigenvalues[keep], axis=1)
    dropped = np.sum(coef[:, ~keep] ** 2, axis=1)
    return value, dropped


def estimation_errors_K(
    betas: np.ndarray, instance: ModelInstance, rel_cutoff: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    cutoff = instance.rel_cutoff if rel_cutoff is None else rel_cutoff
    return k_norm_sq(np.atleast_2d(betas) - instance.beta_star.values, instance.LK_dec, cutoff)


def excess_prediction_error(beta: DiscreteFunction, instance: ModelInstance) -> float:
    check_same_grid(beta, instance.beta_star)
    return float(prediction_errors(beta.values, instance)[0])


def estimation_error_K(
    beta: DiscreteFunction, instance: ModelInstance, rel_cutoff: float | None = None
) -> tuple[float, float]:
    check_same_grid(beta, instance.beta_star)
    v, dropped = estimation_errors_K(beta.values, instance, rel_cutoff)
    return float(v[0]), float(dropped[0])


def mc_excess_error(
    beta: DiscreteFunction, instance: ModelInstance, n_draws: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo estimate of E_X <beta - beta*, X>^2 with its plug-in standard error."""
    if n_draws < 100:
        raise InvalidArgument("n_draws must be at least 100")
    check_same_grid(beta, instance.beta_star)
    d = (beta.values - instance.beta_star.values) * instance.grid.weights
    if not np.any(d):
        return 0.0, 0.0
    X = rng.standard_normal((n_draws, instance.kl_basis.shape[1])) @ instance.kl_basis.T
    sq = (X @ d) ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(n_draws))
