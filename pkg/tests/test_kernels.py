import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flsgd.errors import InvalidArgument
from flsgd.grid import build_grid
from flsgd.kernels import KernelSpec, diagonal_sup, eval_kernel, gram

FAMILIES = [
    KernelSpec.gaussian(0.2),
    KernelSpec.brownian(),
    KernelSpec.sobolev1(),
    KernelSpec.cosine_series(2.0, 16),
    KernelSpec.cosine_series(1.5, 8),
]


def test_point_values():
    assert eval_kernel(KernelSpec.brownian(), 0.3, 0.7) == 0.3
    assert eval_kernel(KernelSpec.sobolev1(), 0.3, 0.7) == pytest.approx(1.3)
    for t in (0.0, 0.4, 1.0):
        assert eval_kernel(KernelSpec.gaussian(0.2), t, t) == 1.0
    harmonic = sum(ell**-2.0 for ell in range(1, 17))
    assert eval_kernel(KernelSpec.cosine_series(2, 16), 0, 0) == pytest.approx(2 * harmonic, rel=1e-14)


def test_arguments_outside_domain():
    with pytest.raises(InvalidArgument):
        eval_kernel(KernelSpec.brownian(), -0.1, 0.5)
    with pytest.raises(InvalidArgument):
        eval_kernel(KernelSpec.brownian(), 0.5, 1.2)


@pytest.mark.parametrize(
    "family,params",
    [("gaussian", (0.0,)), ("cosine-series", (1.0, 16)), ("cosine-series", (2.0, 3)), ("brownian", (1.0,))],
)
def test_invalid_specs(family, params):
    with pytest.raises(InvalidArgument):
        KernelSpec(family, params)


def test_diagonal_sup():
    g = build_grid(65)
    assert diagonal_sup(KernelSpec.brownian(), g) == 1.0
    assert diagonal_sup(KernelSpec.gaussian(0.05), g) == 1.0
    spec = KernelSpec.cosine_series(2, 16)
    fine = np.linspace(0, 1, 10_000)
    # the maximum of sum 2 l^-2 cos^2(l pi t) sits at t = 0, a grid node
    dense = np.max([np.sum(2 * np.arange(1, 17) ** -2.0 * np.cos(np.arange(1, 17) * np.pi * t) ** 2) for t in fine])
    assert diagonal_sup(spec, g) == pytest.approx(dense, rel=1e-12)


@pytest.mark.parametrize("spec", FAMILIES, ids=lambda s: s.family.value)
def test_psd_on_random_subset(spec, rng):
    t = np.sort(rng.uniform(0, 1, 20))
    ev = np.linalg.eigvalsh(gram(spec, t, t))
    assert ev.min() >= -1e-8 * ev.max()


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0, 1), st.floats(0, 1))
def test_symmetry(spec, s, t):
    assert abs(eval_kernel(spec, s, t) - eval_kernel(spec, t, s)) <= 1e-14
