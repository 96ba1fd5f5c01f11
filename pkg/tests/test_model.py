import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flsgd.errors import IllPosedSource, InvalidArgument
from flsgd.grid import DiscreteFunction, build_grid, l2_norm
from flsgd.kernels import KernelSpec
from flsgd.model import (
    CommutingProfile,
    SourceKind,
    beta_lambda,
    build_operators,
    commuting_instance,
    f_lambda,
    infer_source,
    make_beta_star_estimation,
    make_beta_star_prediction,
    sample_X_values,
)


def test_commuting_spectra(commuting):
    ell = np.arange(1, 17.0)
    np.testing.assert_allclose(commuting.TK_dec.eigenvalues[:16], ell**-4, rtol=1e-10)
    np.testing.assert_allclose(commuting.TC_dec.eigenvalues[:16], ell**-4, rtol=1e-10)
    assert commuting.kappa1_sq == pytest.approx(2 * np.sum(ell**-2))


def test_commuting_source_holds(commuting):
    """L_C^{1/2} beta* = T_K^{1/2} g and beta* = L_K^{1/2} T_C^{1/2} g2, both verified by forward maps."""
    pred = commuting.source("prediction")
    lhs = commuting.LC_dec.power(0.5).apply(commuting.beta_star)
    rhs = commuting.TK_dec.power(0.5).apply(pred.seed_function)
    assert l2_norm(lhs - rhs) <= 1e-10 * l2_norm(rhs)
    est = commuting.source("estimation")
    back = make_beta_star_estimation(0.5, est.seed_function, commuting.LK_dec, commuting.TC_dec)
    assert l2_norm(back - commuting.beta_star) <= 1e-10 * l2_norm(commuting.beta_star)


def test_infer_source_roundtrip(commuting):
    src = infer_source(commuting.ops, commuting.beta_star, "prediction", 0.5)
    ref = commuting.source("prediction").seed_function
    assert l2_norm(src.seed_function - ref) <= 1e-6 * l2_norm(ref)


def test_make_beta_star_prediction_general(mixed_ops):
    # a seed built from the leading T_K modes is resolvable
    coef = np.zeros(mixed_ops.grid.size)
    coef[:5] = [1.0, -0.5, 0.25, 0.2, 0.1]
    g = DiscreteFunction(mixed_ops.TK_dec.synthesize(coef), mixed_ops.grid)
    bs = make_beta_star_prediction(0.5, g, mixed_ops.TK_dec, mixed_ops.LC_dec)
    assert bs.residual <= 1e-6 and bs.discarded_fraction < 1e-12


def test_ill_posed_source_rejected():
    ops = build_operators(KernelSpec.cosine_series(2, 8), KernelSpec.cosine_series(2, 8), build_grid(65))
    g = ops.grid.evaluate(lambda t: np.sqrt(2) * np.cos(30 * np.pi * t))
    with pytest.raises(IllPosedSource):
        make_beta_star_prediction(0.5, g, ops.TK_dec, ops.LC_dec)


def test_profile_rejects_aliasing_length():
    with pytest.raises(InvalidArgument):
        commuting_instance(build_grid(16), CommutingProfile(2, 2, 15), "prediction", 0.5, np.ones(15), 1.0)


def test_covariance_of_samples(commuting):
    rng = np.random.default_rng(0)
    X = sample_X_values(commuting.LC_dec, rng, 40_000)
    w = commuting.grid.weights
    emp = (X.T @ X) / X.shape[0] * w[None, :]  # empirical C(t_i, t_j) w_j
    err = np.abs(emp - commuting.LC.matrix).max() / np.abs(commuting.LC.matrix).max()
    assert err < 0.05


def test_beta_lambda_normal_equation(commuting):
    for lam in (1e-1, 1e-3):
        bl = beta_lambda(commuting, lam)
        A = commuting.LKLC
        res = A @ (bl.values - commuting.beta_star.values) + lam * bl.values
        assert np.linalg.norm(res) <= 1e-8 * np.linalg.norm(A @ commuting.beta_star.values)
    with pytest.raises(InvalidArgument):
        beta_lambda(commuting, 0.0)


def test_f_lambda_diagonal_oracle(commuting):
    """In the commuting basis f_lambda has coefficients sqrt(k) c b / (k c + lam)."""
    lam = 1e-2
    f = f_lambda(commuting, lam)
    prof = CommutingProfile(2, 2, 16)
    k, c = prof.spectra()
    b = commuting.LK_dec.coefficients(commuting.beta_star.values)[:16]
    sign = np.sign(commuting.LK_dec.vectors[0, :16])  # basis sign at t = 0
    coef = commuting.LK_dec.coefficients(f.values)[:16]
    np.testing.assert_allclose(coef, np.sqrt(k) * c * b / (k * c + lam), rtol=1e-8, atol=1e-14)
    assert np.all(sign != 0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["prediction", "estimation"]), st.floats(0.1, 1.0), st.integers(0, 2**31))
def test_slope_seed_inverse(kind, exponent, seed):
    prof = CommutingProfile(2.0, 1.5, 12)
    g = np.random.default_rng(seed).standard_normal(12)
    b = prof.slope_coefficients(kind, exponent, g)
    np.testing.assert_allclose(prof.seed_coefficients(SourceKind(kind), exponent, b), g, rtol=1e-10, atol=1e-12)
