import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebglm import LOGISTIC, POISSON, PROBIT, GlmFamily, eval_family, get_family, weight
from ebglm.errors import GlmRangeError


def test_bernoulli_at_zero():
    v = eval_family(LOGISTIC, 0.0)
    assert v["b"] == pytest.approx(math.log(2.0), abs=1e-15)
    assert v["b_dot"] == 0.5
    assert v["b_ddot"] == 0.25


def test_poisson_at_zero():
    assert eval_family(POISSON, 0.0) == {"b": 1.0, "b_dot": 1.0, "b_ddot": 1.0}


def test_bernoulli_mean_matches_high_precision():
    mpmath.mp.dps = 40
    e = mpmath.e ** mpmath.mpf("1.5")
    oracle = float(e / (1 + e))
    assert eval_family(LOGISTIC, 1.5)["b_dot"] == pytest.approx(oracle, rel=1e-15)
    assert oracle == pytest.approx(0.817574, abs=1e-6)


def test_poisson_overflow_raises():
    with pytest.raises(GlmRangeError):
        eval_family(POISSON, 800.0)


def test_canonical_weight_is_variance():
    for fam in (LOGISTIC, POISSON):
        for lp in (-2.0, 0.0, 0.7):
            assert weight(fam, lp) == pytest.approx(float(fam.b_ddot(lp)), rel=1e-15)


def test_probit_weight_at_zero():
    mpmath.mp.dps = 30
    phi, Phi = mpmath.npdf(0), mpmath.ncdf(0)
    oracle = float(phi ** 2 / (Phi * (1 - Phi)))
    assert weight(PROBIT, 0.0) == pytest.approx(oracle, rel=1e-14)
    assert oracle == pytest.approx(0.63662, abs=1e-5)


@pytest.mark.parametrize("lp", [-30.0, -8.0, -1.3, 0.4, 5.0, 30.0])
def test_probit_weight_matches_high_precision(lp):
    mpmath.mp.dps = 60
    x = mpmath.mpf(lp)
    oracle = float(mpmath.npdf(x) ** 2 / (mpmath.ncdf(x) * mpmath.ncdf(-x)))
    assert weight(PROBIT, lp) == pytest.approx(oracle, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(-40, 40))
def test_probit_weight_equals_chain_rule(lp):
    # w = u' * xi' with xi = natural parameter of the probit mean
    direct = float(PROBIT.inv_link_dot(lp) * PROBIT.xi_dot(lp))
    if direct > 1e-300:
        assert weight(PROBIT, lp) == pytest.approx(direct, rel=1e-8)


@settings(max_examples=200, deadline=None)
@given(st.floats(-600, 600))
def test_weights_nonnegative_and_bounded(lp):
    for fam in (LOGISTIC, PROBIT):
        w = weight(fam, lp)
        assert 0.0 <= w <= 1.0
    assert weight(LOGISTIC, lp) <= 0.25


@settings(max_examples=100, deadline=None)
@given(st.floats(-30, 30))
def test_cumulant_derivatives_by_finite_difference(eta):
    for fam in (LOGISTIC, POISSON):
        h = 1e-5 * (1 + abs(eta))
        fd1 = (fam.b(eta + h) - fam.b(eta - h)) / (2 * h)
        fd2 = (fam.b_dot(eta + h) - fam.b_dot(eta - h)) / (2 * h)
        scale = 1 + abs(float(fam.b(eta)))
        assert abs(fd1 - fam.b_dot(eta)) <= 1e-6 * scale
        assert abs(fd2 - fam.b_ddot(eta)) <= 1e-6 * (1 + abs(float(fam.b_dot(eta))))


def test_get_family_names():
    assert get_family("logistic") is LOGISTIC
    assert get_family("Poisson") is POISSON
    assert get_family("probit") is PROBIT
    with pytest.raises(ValueError):
        get_family("gamma")


def test_invalid_family_combinations():
    with pytest.raises(ValueError):
        GlmFamily("poisson", "probit")
    with pytest.raises(ValueError):
        GlmFamily("gaussian")


def test_sample_support(rng):
    lp = rng.standard_normal(1000)
    yb = LOGISTIC.sample(lp, rng)
    assert set(np.unique(yb)) <= {0.0, 1.0}
    yp = POISSON.sample(lp, rng)
    assert np.all(yp >= 0) and np.all(yp == np.floor(yp))
