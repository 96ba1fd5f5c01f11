"""Relative error of Nystrom Brownian-covariance eigenvalues against 1/((l - 1/2)^2 pi^2).

Compares the two built-in rules with a midpoint rule to show that the error at
l = m/8 is the generic second-order discretization error, about ((l - 1/2) pi / m)^2 / 12.
"""

from __future__ import annotations

import argparse

import numpy as np

from flsgd.grid import Grid, build_grid
from flsgd.kernels import KernelSpec
from flsgd.operators import assemble, decompose


def midpoint(m: int) -> Grid:
    # the scheme label is nominal; nodes and weights are the midpoint rule
    return Grid((np.arange(m) + 0.5) / m, np.full(m, 1.0 / m), "composite-trapezoid")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=256)
    args = ap.parse_args()
    m = args.m
    ell = np.arange(1, m // 8 + 1)
    exact = 1 / ((ell - 0.5) ** 2 * np.pi**2)
    grids = {
        "trapezoid": build_grid(m, "composite-trapezoid"),
        "gauss-legendre": build_grid(m, "gauss-legendre"),
        "midpoint": midpoint(m),
    }
    for name, g in grids.items():
        lam = decompose(assemble(KernelSpec.brownian(), g)).eigenvalues[: ell.size]
        err = np.abs(lam - exact) / exact
        above = ell[err > 0.01]
        first = int(above[0]) if above.size else None
        print(f"{name:<15s} max {err.max():.4%}  first l above 1%: {first}")
    print(f"predicted ((m/8 - 1/2) pi / m)^2 / 12 = {((m / 8 - 0.5) * np.pi / m) ** 2 / 12:.4%}")


if __name__ == "__main__":
    main()
