"""Mercer kernels on [0, 1]^2."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidArgument
from .grid import Grid


class Family(str, Enum):
    GAUSSIAN = "gaussian"
    BROWNIAN = "brownian"
    SOBOLEV1 = "sobolev1"
    COSINE_SERIES = "cosine-series"


_ARITY = {Family.GAUSSIAN: 1, Family.BROWNIAN: 0, Family.SOBOLEV1: 0, Family.COSINE_SERIES: 2}


@dataclass(frozen=True)
class KernelSpec:
    """``parameters``: (bandwidth,) for gaussian, (p, L) for cosine-series, () otherwise."""

    family: Family
    parameters: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        fam = Family(self.family)
        params = tuple(float(p) for p in self.parameters)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "parameters", params)
        if len(params) != _ARITY[fam]:
            raise InvalidArgument(f"{fam.value} takes {_ARITY[fam]} parameter(s), got {len(params)}")
        if fam is Family.GAUSSIAN and params[0] <= 0:
            raise InvalidArgument("gaussian bandwidth must be positive")
        if fam is Family.COSINE_SERIES:
            p, L = params
            if p <= 1:
                raise InvalidArgument("cosine-series decay exponent must exceed 1")
            if L < 4 or L != int(L):
                raise InvalidArgument("cosine-series length must be an integer >= 4")

    @classmethod
    def gaussian(cls, bandwidth: float) -> KernelSpec:
        return cls(Family.GAUSSIAN, (bandwidth,))

    @classmethod
    def brownian(cls) -> KernelSpec:
        return cls(Family.BROWNIAN)

    @classmethod
    def sobolev1(cls) -> KernelSpec:
        return cls(Family.SOBOLEV1)

    @classmethod
    def cosine_series(cls, p: float, length: int) -> KernelSpec:
        return cls(Family.COSINE_SERIES, (p, length))

    def eigenvalues(self) -> np.ndarray | None:
        """Closed-form spectrum when known (cosine-series only)."""
        if self.family is Family.COSINE_SERIES:
            p, L = self.parameters
            return np.arange(1, int(L) + 1, dtype=float) ** (-p)
        return None


def cosine_basis(t: np.ndarray, length: int) -> np.ndarray:
    """Columns sqrt(2) cos(l pi t) for l = 1..length."""
    ell = np.arange(1, length + 1)
    return np.sqrt(2.0) * np.cos(np.pi * np.multiply.outer(np.asarray(t, dtype=float), ell))


def gram(spec: KernelSpec, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Kernel matrix K(s_i, t_j)."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    fam = spec.family
    if fam is Family.GAUSSIAN:
        (bw,) = spec.parameters
        d = np.subtract.outer(s, t)
        return np.exp(-(d**2) / (2 * bw**2))
    if fam is Family.BROWNIAN:
        return np.minimum.outer(s, t)
    if fam is Family.SOBOLEV1:
        return 1.0 + np.minimum.outer(s, t)
    p, L = spec.parameters
    L = int(L)
    lam = np.arange(1, L + 1, dtype=float) ** (-p)
    return (cosine_basis(s, L) * lam) @ cosine_basis(t, L).T


def eval_kernel(spec: KernelSpec, s: float, t: float) -> float:
    for v in (s, t):
        if not 0.0 <= v <= 1.0:
            raise InvalidArgument(f"kernel argument {v} outside [0, 1]")
    return float(gram(spec, np.array([s]), np.array([t]))[0, 0])


def diagonal(spec: KernelSpec, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    fam = spec.family
    if fam is Family.GAUSSIAN:
        return np.ones_like(t)
    if fam is Family.BROWNIAN:
        return t.copy()
    if fam is Family.SOBOLEV1:
        return 1.0 + t
    p, L = spec.parameters
    L = int(L)
    lam = np.arange(1, L + 1, dtype=float) ** (-p)
    return (cosine_basis(t, L) ** 2) @ lam


def diagonal_sup(spec: KernelSpec, grid: Grid) -> float:
    """max_t K(t, t) over the grid nodes."""
    return float(np.max(diagonal(spec, grid.nodes)))
