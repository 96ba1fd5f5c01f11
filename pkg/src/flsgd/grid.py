"""Quadrature grids on [0, 1] and functions sampled on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import GridMismatch, InvalidArgument

MIN_GRID_SIZE = 8


class Scheme(str, Enum):
    TRAPEZOID = "composite-trapezoid"
    GAUSS_LEGENDRE = "gauss-legendre"


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    scheme: Scheme
    token: str = field(init=False)

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise InvalidArgument("nodes and weights must be 1-d arrays of equal length")
        if nodes.size < MIN_GRID_SIZE:
            raise InvalidArgument(f"grid needs at least {MIN_GRID_SIZE} nodes, got {nodes.size}")
        if np.any(np.diff(nodes) <= 0) or nodes[0] < 0 or nodes[-1] > 1:
            raise InvalidArgument("nodes must be strictly increasing inside [0, 1]")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidArgument("weights must be positive and sum to 1")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "token", f"{Scheme(self.scheme).value}:{nodes.size}")

    @property
    def size(self) -> int:
        return self.nodes.size

    def function(self, values) -> DiscreteFunction:
        return DiscreteFunction(values, self)

    def evaluate(self, fn) -> DiscreteFunction:
        """Sample a vectorized callable at the nodes."""
        return DiscreteFunction(np.asarray(fn(self.nodes), dtype=float) * np.ones(self.size), self)

    def zeros(self) -> DiscreteFunction:
        return DiscreteFunction(np.zeros(self.size), self)


def build_grid(size: int, scheme: Scheme | str = Scheme.TRAPEZOID) -> Grid:
    if int(size) != size or size < MIN_GRID_SIZE:
        raise InvalidArgument(f"grid size must be an integer >= {MIN_GRID_SIZE}, got {size}")
    size = int(size)
    scheme = Scheme(scheme)
    if scheme is Scheme.TRAPEZOID:
        nodes = np.linspace(0.0, 1.0, size)
        h = 1.0 / (size - 1)
        weights = np.full(size, h)
        weights[0] = weights[-1] = h / 2
    else:
        x, w = np.polynomial.legendre.leggauss(size)
        nodes = (x + 1.0) / 2.0
        weights = w / 2.0
    # renormalize the last few ulps so the unit-measure invariant holds exactly
    weights = weights / weights.sum()
    return Grid(nodes, weights, scheme)


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    values: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise GridMismatch(
                f"expected {self.grid.size} values for grid {self.grid.token}, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("function values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def grid_id(self) -> str:
        return self.grid.token

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, DiscreteFunction):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other) -> DiscreteFunction:
        return DiscreteFunction(self.values + self._coerce(other), self.grid)

    def __sub__(self, other) -> DiscreteFunction:
        return DiscreteFunction(self.values - self._coerce(other), self.grid)

    def __mul__(self, scalar: float) -> DiscreteFunction:
        return DiscreteFunction(self.values * float(scalar), self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> DiscreteFunction:
        return DiscreteFunction(-self.values, self.grid)


def check_same_grid(*objs) -> Grid:
    tokens = {o.grid.token for o in objs}
    if len(tokens) != 1:
        raise GridMismatch(f"objects live on different grids: {sorted(tokens)}")
    return objs[0].grid


def inner_product(f: DiscreteFunction, g: DiscreteFunction) -> float:
    grid = check_same_grid(f, g)
    return float(np.dot(grid.weights * f.values, g.values))


def l2_norm(f: DiscreteFunction) -> float:
    return float(np.sqrt(max(inner_product(f, f), 0.0)))
