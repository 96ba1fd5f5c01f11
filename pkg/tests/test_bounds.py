import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from flsgd import bounds
from flsgd.errors import InvalidArgument, StepSizeTooLarge, UnsupportedBranch
from flsgd.learner import RegularizationPlan, StepSchedule
from flsgd.model import CommutingProfile, beta_lambda


def naive_series(gammas, lam, nu):
    k = len(gammas)
    total = 0.0
    for i in range(k):
        S = sum(gammas[j] for j in range(i + 1, k))
        denom = 1.0 if nu == 0 else 1.0 + S**nu
        total += gammas[i] ** 2 * math.exp(-lam * S) / denom
    return total


def test_tail_sums():
    np.testing.assert_allclose(bounds.tail_sums(np.array([1.0, 2.0, 3.0])), [5.0, 3.0, 0.0])


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.8])
def test_step_series_matches_naive(nu):
    case = bounds.SeriesCase(nu, 0.6, 0.3, 0.05, 37)
    assert bounds.step_series(case) == pytest.approx(naive_series(list(case.gammas()), 0.05, nu), rel=1e-12)


def test_contraction_norm_sq_brute_force():
    rng = np.random.default_rng(2)
    eig = rng.uniform(0, 2, 6)
    gam, lam, alpha = rng.uniform(0, 0.4, 9), 0.1, 0.75
    M = np.eye(6)
    for g in gam:
        M = (np.eye(6) - g * (np.diag(eig) + lam * np.eye(6))) @ M
    M = np.diag(eig**alpha) @ M
    assert bounds.contraction_norm_sq(eig, alpha, gam, lam) == pytest.approx(np.linalg.norm(M, 2) ** 2, rel=1e-12)


def test_contraction_bound_rejects_large_steps():
    with pytest.raises(InvalidArgument):
        bounds.contraction_norm_bound(0.5, 2.0, [0.6], 0.0)
    with pytest.raises(InvalidArgument):
        bounds.contraction_norm_bound(0.0, 1.0, [0.1], 0.0)


def test_branch_selection():
    assert bounds.select_branch(1, 0.3) is bounds.Branch.NU_ONE
    assert bounds.select_branch(0.5, 0.3) is bounds.Branch.NU_FRAC_MU_SMALL
    assert bounds.select_branch(0.5, 0.5) is bounds.Branch.NU_FRAC_MU_LARGE
    assert bounds.select_branch(0, 0.7) is bounds.Branch.NU_ZERO
    assert bounds.select_branch(3, 0.7) is bounds.Branch.NU_LARGE
    for mu in (0.2, 0.5):
        with pytest.raises(UnsupportedBranch):
            bounds.select_branch(0, mu)


def test_constants():
    assert bounds.d_mu(0.5) == pytest.approx(2 * (1 - 2**-0.5))
    c = bounds.series_constants(0.5, 1.0, 0.1)
    assert c.C_mu_1 == 4.0
    assert c.C_mu == pytest.approx(1 + 4 + 18 / 0.1 * (0.5 + math.log(2 - 2**-0.5)))
    sat = bounds.series_constants(0.5, 1.0, 0.1, saturate=True)
    assert sat.C_mu < c.C_mu
    # gamma1 beyond 1 - mu: the minimum already saturates
    assert bounds.series_constants(0.3, 1.0, 0.9).C_mu == bounds.series_constants(0.3, 1.0, 0.9, saturate=True).C_mu


def test_series_caps_meet_targets():
    """At gamma1 = cap, the step series stays below the threshold the cap is designed for."""
    c, kps = 3.0, 1.5
    for mu in (0.3, 0.5, 0.7):
        cap = bounds.series_caps(mu, c, kps).cap_benign
        target = bounds.benign_series_target(c, kps)
        for k in (1, 10, 1000, 20000):
            assert bounds.step_series(bounds.SeriesCase(1.0, mu, cap, 1e-3, k)) <= target
    s, tr = 0.5, 2.3
    for mu in (0.3, 0.6):
        cap = bounds.series_caps(mu, c, kps, s, tr).cap_capacity
        target = bounds.capacity_series_target(c, kps, s, tr)
        for k in (1, 100, 20000):
            assert bounds.step_series(bounds.SeriesCase(2 - s, mu, cap, 1e-3, k)) <= target


def test_constant_step_caps():
    cap2, star = bounds.constant_step_caps(0.5, 3.0, 1.0)
    assert cap2 == pytest.approx(1 / (2 * 4 * 4 * 3)) and star is None
    _, star = bounds.constant_step_caps(0.5, 3.0, 1.0, 0.5, 2.0)
    assert star is not None and star > 0


def test_uniform_bound(commuting):
    b = commuting.beta_star.values
    expect = 8 * commuting.kappa2_sq * float(np.sum(commuting.grid.weights * b * b)) + 0.25
    assert bounds.uniform_bound(commuting) == pytest.approx(expect)


def test_prediction_approx_commuting_oracle(commuting):
    """Approximation term evaluated coefficient-wise in the shared cosine basis."""
    lam = 0.02
    gam = StepSchedule.polynomial(0.05, 0.5).gammas(40)
    k, c = CommutingProfile(2, 2, 16).spectra()
    b = commuting.LK_dec.coefficients(commuting.beta_star.values)[:16]
    bl = k * c * b / (k * c + lam)
    omega = np.prod(1 - np.multiply.outer(gam, k * c + lam), axis=0)
    first = math.sqrt(np.sum((np.sqrt(c) * bl * omega) ** 2))
    second = math.sqrt(np.sum(c * (bl - b) ** 2))
    got = bounds.prediction_bound(commuting, gam, lam).approx
    assert got == pytest.approx((first + second) ** 2, rel=1e-8)
    np.testing.assert_allclose(commuting.LK_dec.coefficients(beta_lambda(commuting, lam).values)[:16], bl, rtol=1e-8)


def test_source_form_dominates_operator_form(commuting):
    gam = StepSchedule.polynomial(0.05, 0.5).gammas(64)
    for lam in (1e-1, 1e-2, 1e-3):
        p_op = bounds.prediction_bound(commuting, gam, lam)
        p_src = bounds.prediction_bound(commuting, gam, lam, form="source")
        assert p_op.approx <= p_src.approx and p_op.sample == p_src.sample
        e_op = bounds.estimation_bound(commuting, gam, lam)
        e_src = bounds.estimation_bound(commuting, gam, lam, form="source")
        assert e_op.approx <= e_src.approx


def test_bound_argument_checks(commuting):
    gam = np.full(4, 0.05)
    with pytest.raises(InvalidArgument):
        bounds.prediction_bound(commuting, gam, 0.0)
    with pytest.raises(InvalidArgument):
        bounds.prediction_bound(commuting, gam, 0.1, mode="capacity")
    with pytest.raises(InvalidArgument):
        bounds.estimation_bound(commuting, gam, 0.1, form="other")
    with pytest.raises(StepSizeTooLarge) as err:
        bounds.prediction_bound(commuting, [0.05, 0.05, 5.0], 0.1)
    assert err.value.j == 3


def test_wrappers(commuting):
    sched, plan = StepSchedule.constant(0.4, 0.5, 64), RegularizationPlan(0.05)
    a = bounds.decomposition_rhs_estimation(commuting, sched, plan, 64, mode="capacity", s=0.5)
    b = bounds.estimation_bound(commuting, sched.gammas(64), 0.05, mode="capacity", s=0.5)
    assert a == b


supported = st.tuples(
    st.sampled_from([0.0, 0.25, 0.5, 0.9, 1.0, 1.5, 3.0]),
    st.floats(0.05, 0.95),
    st.floats(0.001, 0.99),
    st.floats(1e-4, 1.0),
    st.integers(1, 3000),
)


@settings(max_examples=150, deadline=None)
@given(supported)
def test_series_bound_dominates(args):
    nu, mu, g1, lam, k = args
    assume(not (nu == 0 and mu <= 0.5))
    case = bounds.SeriesCase(nu, mu, g1, lam, k)
    assert bounds.step_series(case) <= bounds.step_series_bound(case).bound


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from([0.5, 0.75, 1.0]),
    st.floats(0.01, 10),
    st.floats(0, 1),
    st.lists(st.floats(0, 1), max_size=40),
    st.integers(0, 2**31),
)
def test_contraction_bound_dominates(alpha, c_star, lam, fracs, seed):
    eig = np.random.default_rng(seed).uniform(0, c_star, 10)
    gam = np.asarray(fracs) / (c_star + lam)
    assert bounds.contraction_norm_sq(eig, alpha, gam, lam) <= bounds.contraction_norm_bound(alpha, c_star, gam, lam)
