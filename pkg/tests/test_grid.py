import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flsgd.errors import GridMismatch, InvalidArgument
from flsgd.grid import DiscreteFunction, Scheme, build_grid, inner_product, l2_norm


def legendre_nodes_newton(m: int):
    """Gauss-Legendre rule on [-1, 1] by Newton iteration on P_m (independent of numpy's table)."""
    x = np.cos(np.pi * (np.arange(1, m + 1) - 0.25) / (m + 0.5))
    for _ in range(100):
        p0, p1 = np.ones_like(x), x.copy()
        for k in range(2, m + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = m * (x * p1 - p0) / (x**2 - 1)
        dx = p1 / dp
        x -= dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    w = 2 / ((1 - x**2) * dp**2)
    order = np.argsort(x)
    return x[order], w[order]


def test_rejects_small_grid():
    with pytest.raises(InvalidArgument):
        build_grid(2)
    with pytest.raises(InvalidArgument):
        build_grid(7, "gauss-legendre")


def test_trapezoid_nine_points():
    g = build_grid(9, "composite-trapezoid")
    np.testing.assert_allclose(g.nodes, np.arange(9) / 8, atol=1e-15)
    np.testing.assert_allclose(g.weights[[0, -1]], 1 / 16, atol=1e-15)
    np.testing.assert_allclose(g.weights[1:-1], 1 / 8, atol=1e-15)


def test_gauss_legendre_against_newton_table():
    g = build_grid(64, Scheme.GAUSS_LEGENDRE)
    assert abs(g.weights.sum() - 1) <= 1e-14
    x, w = legendre_nodes_newton(64)
    np.testing.assert_allclose(g.nodes, (x + 1) / 2, atol=1e-13)
    np.testing.assert_allclose(g.weights, w / 2, rtol=1e-10)


def test_inner_products():
    g = build_grid(128)
    s = g.evaluate(lambda t: np.sin(2 * np.pi * t))
    c = g.evaluate(lambda t: np.cos(2 * np.pi * t))
    assert inner_product(g.zeros(), g.zeros()) == 0
    assert abs(inner_product(s, c)) <= 1e-6
    assert abs(l2_norm(g.evaluate(lambda t: 2.0)) - 2) <= 1e-12
    assert abs(l2_norm(s) - np.sqrt(0.5)) <= 1e-6


def test_grid_mismatch():
    a, b = build_grid(16), build_grid(17)
    with pytest.raises(GridMismatch):
        inner_product(a.zeros(), b.zeros())
    with pytest.raises(GridMismatch):
        DiscreteFunction(np.zeros(5), a)


def test_nonfinite_values_rejected():
    g = build_grid(8)
    with pytest.raises(InvalidArgument):
        DiscreteFunction(np.full(8, np.nan), g)


def test_immutability():
    g = build_grid(8)
    f = g.evaluate(np.sin)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        g.weights[0] = 1.0


@pytest.mark.parametrize("scheme", list(Scheme))
def test_exactness(scheme):
    g = build_grid(20, scheme)
    if scheme is Scheme.TRAPEZOID:
        one = g.zeros() + 1.0
        assert abs(inner_product(one, g.evaluate(lambda t: 3 * t - 1)) - 0.5) <= 1e-14
    else:
        for deg in range(0, 2 * 20):
            val = inner_product(g.zeros() + 1.0, g.evaluate(lambda t: t**deg))
            assert abs(val - 1 / (deg + 1)) <= 1e-10 / (deg + 1)


def test_trapezoid_refinement_is_second_order():
    errs = []
    for m in (33, 65, 129):
        g = build_grid(m)
        errs.append(abs(l2_norm(g.evaluate(np.exp)) ** 2 - (np.e**2 - 1) / 2))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.5))


@settings(max_examples=50, deadline=None)
@given(st.integers(8, 64), st.sampled_from(list(Scheme)), st.integers(0, 2**31))
def test_inner_product_symmetric_bilinear(m, scheme, seed):
    g = build_grid(m, scheme)
    r = np.random.default_rng(seed)
    f, h, k = (DiscreteFunction(r.standard_normal(m), g) for _ in range(3))
    assert inner_product(f, h) == pytest.approx(inner_product(h, f), rel=1e-12, abs=1e-12)
    lhs = inner_product(f * 2.0 + h, k)
    assert lhs == pytest.approx(2 * inner_product(f, k) + inner_product(h, k), rel=1e-9, abs=1e-9)
    assert np.all(g.weights > 0) and abs(g.weights.sum() - 1) <= 1e-12
