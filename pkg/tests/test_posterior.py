import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.special import comb

from ebglm import (LOGISTIC, POISSON, PROBIT, Dataset, Hyperparameters, ScoreCache,
                   conditional_posterior_draw, enumerate_posterior, fit_mle, log_likelihood,
                   log_marginal_laplace, log_marginal_quadrature, score_configuration)
from ebglm.errors import UnsupportedError
from ebglm.posterior import bvm_scale, dump_enumeration

from conftest import make_data, sparse_instance


@pytest.fixture
def small_logistic():
    return sparse_instance(LOGISTIC, 100, 5, [0, 2], [0.4, -0.3], seed=12)[0]


def test_laplace_gamma_zero_limit(small_logistic):
    fit = fit_mle(small_logistic, LOGISTIC, (0, 2))
    assert log_marginal_laplace(fit, 0.7, 0.0) == 0.7 * fit.loglik_hat


def test_laplace_equal_size_difference(small_logistic):
    a = fit_mle(small_logistic, LOGISTIC, (0, 2))
    b = fit_mle(small_logistic, LOGISTIC, (1, 3))
    diff = log_marginal_laplace(a, 0.9, 1.5) - log_marginal_laplace(b, 0.9, 1.5)
    assert diff == pytest.approx(0.9 * (a.loglik_hat - b.loglik_hat), rel=1e-12)


def test_laplace_closed_form(small_logistic):
    fit = fit_mle(small_logistic, LOGISTIC, (0,))
    expected = -0.5 * math.log(1 + 0.999 * 2.0) + 0.999 * log_likelihood(
        small_logistic, LOGISTIC, (0,), fit.theta_hat)
    assert log_marginal_laplace(fit, 0.999, 2.0) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_single_column_bracket(seed):
    d = sparse_instance(LOGISTIC, 120, 2, [0], [0.3], seed=seed)[0]
    fit = fit_mle(d, LOGISTIC, (0,))
    gap = (log_marginal_quadrature(d, LOGISTIC, fit, 0.999, 1.0)
           - log_marginal_laplace(fit, 0.999, 1.0))
    assert 0.0 <= gap <= 0.1


def test_quadrature_zero_power_is_flat(small_logistic):
    # with alpha = 0 the integrand is the prior itself, which integrates to 1
    fit = fit_mle(small_logistic, LOGISTIC, (0, 2))
    assert log_marginal_quadrature(small_logistic, LOGISTIC, fit, 0.0, 1.0) == pytest.approx(
        0.0, abs=1e-12)


@pytest.mark.parametrize("fam", [LOGISTIC, POISSON, PROBIT], ids=lambda f: f.name)
def test_quadrature_converged(fam):
    d = sparse_instance(fam, 80, 3, [0, 1], [0.5, -0.4], seed=4, scale=0.8)[0]
    fit = fit_mle(d, fam, (0, 1))
    a = log_marginal_quadrature(d, fam, fit, 0.999, 1.0, nodes=32)
    b = log_marginal_quadrature(d, fam, fit, 0.999, 1.0, nodes=64)
    assert abs(a - b) < 1e-8


def test_quadrature_against_brute_force_integral():
    # independent 1-d trapezoid integration of prior x likelihood^alpha
    d = sparse_instance(LOGISTIC, 60, 1, [0], [0.5], seed=9)[0]
    fit = fit_mle(d, LOGISTIC, (0,))
    alpha, gamma = 0.999, 1.0
    sd = math.sqrt(gamma / fit.info[0, 0])
    grid = np.linspace(fit.theta_hat[0] - 12 * sd, fit.theta_hat[0] + 12 * sd, 20001)
    logs = np.array([alpha * log_likelihood(d, LOGISTIC, (0,), [t]) for t in grid])
    logs += -0.5 * ((grid - fit.theta_hat[0]) / sd) ** 2 - math.log(sd * math.sqrt(2 * math.pi))
    top = logs.max()
    oracle = top + math.log(trapezoid(np.exp(logs - top), grid))
    assert log_marginal_quadrature(d, LOGISTIC, fit, alpha, gamma) == pytest.approx(
        oracle, abs=1e-8)


def test_quadrature_rejects_large_configs(small_logistic):
    fit = fit_mle(small_logistic, LOGISTIC, (0, 1, 2, 3))
    with pytest.raises(UnsupportedError):
        log_marginal_quadrature(small_logistic, LOGISTIC, fit, 0.999, 1.0)


# scoring

def test_score_recomposition(small_logistic):
    hyper = Hyperparameters(beta=1.3, s_max=3).resolve(100, 5)
    sc = score_configuration(small_logistic, LOGISTIC, (0, 2), hyper)
    ll = log_likelihood(small_logistic, LOGISTIC, (0, 2), sc.fit.theta_hat)
    oracle = (-math.log(comb(5, 2)) - 1.3 * 2 * math.log(5)
              - math.log(1 + 0.999) + 0.999 * ll)
    assert sc.log_unnorm_posterior == pytest.approx(oracle, rel=1e-12)


def test_score_outside_support(small_logistic):
    hyper = Hyperparameters(s_max=2).resolve(100, 5)
    sc = score_configuration(small_logistic, LOGISTIC, (0, 1, 2), hyper)
    assert sc.log_unnorm_posterior == -math.inf and sc.fit is None


def test_cache_hit_has_no_new_fits(small_logistic):
    hyper = Hyperparameters().resolve(100, 5)
    cache = ScoreCache()
    a = score_configuration(small_logistic, LOGISTIC, (2, 0), hyper, cache)
    assert cache.fits == 1
    b = score_configuration(small_logistic, LOGISTIC, (0, 2), hyper, cache)
    assert cache.fits == 1 and a is b
    assert cache.fit((0, 2)) is a.fit
    with pytest.raises(KeyError):
        cache.fit((1,))


def test_failed_fit_scores_minus_inf(rng):
    X = rng.standard_normal((40, 2))
    d = Dataset(np.c_[X, X[:, 0]], LOGISTIC.sample(X[:, 0], rng))
    sc = score_configuration(d, LOGISTIC, (0, 2), Hyperparameters().resolve(40, 3))
    assert sc.failed and sc.log_unnorm_posterior == -math.inf


# enumeration

def test_enumeration_duplicate_columns_exchangeable(rng):
    x = rng.standard_normal(60)
    X = np.c_[x, x, rng.standard_normal(60)]
    d = Dataset(X, LOGISTIC.sample(0.8 * x, rng))
    post = enumerate_posterior(d, LOGISTIC, Hyperparameters(s_max=3).resolve(60, 3))
    assert post.probability((0,)) == pytest.approx(post.probability((1,)), rel=1e-12)
    assert post.probability((0, 1)) == 0.0
    assert sum(q for _, q in post.entries) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_enumeration_normalised(seed):
    d = sparse_instance(LOGISTIC, 50, 4, [1], [1.0], seed=seed)[0]
    post = enumerate_posterior(d, LOGISTIC, Hyperparameters(s_max=3).resolve(50, 4))
    probs = np.array([q for _, q in post.entries])
    assert np.all(probs >= 0) and probs.sum() == pytest.approx(1.0, abs=1e-12)
    incl = post.inclusion()
    assert np.all((incl >= -1e-15) & (incl <= 1 + 1e-12))


def test_enumeration_guard(rng):
    d = make_data(LOGISTIC, 40, 16, rng)
    with pytest.raises(UnsupportedError):
        enumerate_posterior(d, LOGISTIC, Hyperparameters(s_max=2).resolve(40, 16))


def test_enumeration_mode_and_dump(small_logistic, tmp_path):
    post = enumerate_posterior(small_logistic, LOGISTIC,
                               Hyperparameters(s_max=2).resolve(100, 5))
    assert post.mode() in post.as_dict()
    dump_enumeration(post, tmp_path / "e.json", small_logistic.column_names)
    assert (tmp_path / "e.json").read_text().startswith("{")


# conditional posterior draws

def test_bvm_scale():
    assert bvm_scale(1.0, 1.0) == 0.5
    assert bvm_scale(0.999, 1.0) == pytest.approx(1 / 1.999)


def test_conditional_posterior_draw_covariance(small_logistic):
    fit = fit_mle(small_logistic, LOGISTIC, (0, 2))
    draws = conditional_posterior_draw(fit, 0.999, 1.0, np.random.default_rng(1), size=100_000)
    cov = bvm_scale(0.999, 1.0) * np.linalg.inv(fit.info)
    emp = np.cov(draws, rowvar=False)
    assert np.linalg.norm(emp - cov) / np.linalg.norm(cov) <= 0.05
