import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import comb

from ebglm import (LOGISTIC, Hyperparameters, fit_mle, log_conditional_prior_density,
                   log_config_prior, sample_conditional_prior)

from conftest import make_data

# log C(200, 4) = log(64684950) evaluated independently
LOG_C_200_4 = math.log(64684950)


def test_log_binomial_constant():
    assert comb(200, 4, exact=True) == 64684950
    assert LOG_C_200_4 == pytest.approx(17.985039, abs=1e-6)


def test_complexity_prior_example():
    v = log_config_prior(200, 4, 1.0, 50)
    assert v == pytest.approx(-(LOG_C_200_4 + 4 * math.log(200)), rel=1e-13)
    assert v == pytest.approx(-39.178309, abs=1e-6)


def test_complexity_prior_truncation():
    assert log_config_prior(30, 6, 1.2, 5) == -math.inf
    assert log_config_prior(30, 5, 1.2, 5) > -math.inf
    with pytest.raises(ValueError):
        log_config_prior(30, 0, 1.2, 5)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 500), st.data())
def test_complexity_prior_depends_only_on_size(p, data):
    s = data.draw(st.integers(1, p))
    beta = data.draw(st.floats(0.1, 3.0))
    v = log_config_prior(p, s, beta, p)
    exact = -math.log(comb(p, s, exact=True)) - beta * s * math.log(p)
    assert v == pytest.approx(exact, rel=1e-11, abs=1e-11)


def test_complexity_prior_decreasing_in_size():
    vals = [log_config_prior(100, s, 1.1, 100) for s in range(1, 50)]
    assert np.all(np.diff(vals) < 0)


@pytest.fixture
def fit2(rng):
    d = make_data(LOGISTIC, 120, 3, rng, theta=[0.6, -0.4, 0.0])
    return fit_mle(d, LOGISTIC, (0, 1))


def test_density_at_mean(fit2):
    sign, logdet = np.linalg.slogdet(fit2.info)
    v = log_conditional_prior_density(fit2, fit2.theta_hat, 1.0)
    assert v == pytest.approx(-math.log(2 * math.pi) + 0.5 * logdet, rel=1e-9)


def test_density_gamma_scaling(fit2):
    a = log_conditional_prior_density(fit2, fit2.theta_hat, 1.0)
    b = log_conditional_prior_density(fit2, fit2.theta_hat, 2.0)
    assert a - b == pytest.approx(math.log(2), rel=1e-12)


def test_density_matches_explicit_2x2(fit2):
    J = fit2.info
    gamma = 1.7
    cov = gamma * np.array([[J[1, 1], -J[0, 1]], [-J[1, 0], J[0, 0]]]) / (
        J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    prec = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    pt = fit2.theta_hat + np.array([0.13, -0.31])
    u = pt - fit2.theta_hat
    oracle = -math.log(2 * math.pi) - 0.5 * math.log(det) - 0.5 * u @ prec @ u
    assert log_conditional_prior_density(fit2, pt, gamma) == pytest.approx(oracle, abs=1e-10)


def test_prior_draw_moments(fit2):
    rng = np.random.default_rng(5)
    gamma = 1.3
    draws = sample_conditional_prior(fit2, gamma, rng, size=100_000)
    cov = gamma * np.linalg.inv(fit2.info)
    se = np.sqrt(np.diag(cov) / draws.shape[0])
    assert np.all(np.abs(draws.mean(0) - fit2.theta_hat) <= 4 * se)
    emp = np.cov(draws, rowvar=False)
    assert np.linalg.norm(emp - cov) / np.linalg.norm(cov) <= 0.05


def test_prior_draw_deterministic(fit2):
    a = sample_conditional_prior(fit2, 1.0, np.random.default_rng(3), size=50)
    b = sample_conditional_prior(fit2, 1.0, np.random.default_rng(3), size=50)
    assert np.array_equal(a, b)
    assert sample_conditional_prior(fit2, 1.0, np.random.default_rng(3)).shape == (2,)


# Hyperparameters

def test_hyper_defaults_resolve():
    h = Hyperparameters().resolve(100, 200)
    assert h.beta == pytest.approx(1.01 + 0.5 * math.log(100) / math.log(200))
    assert h.s_max == 50
    assert h.total_steps == 12500
    assert Hyperparameters().resolve(9, 3).s_max == 3
    assert Hyperparameters(beta=0.5, s_max=2).resolve(100, 200).beta == 0.5


@pytest.mark.parametrize("kw", [dict(alpha=1.0), dict(alpha=0.0), dict(gamma=0.0),
                                dict(beta=-1.0), dict(burnin=1.0), dict(threshold=1.0),
                                dict(s_max=0), dict(samples=0), dict(seed=-1)])
def test_hyper_validation(kw):
    with pytest.raises(ValueError):
        Hyperparameters(**kw)


def test_hyper_smax_too_large():
    with pytest.raises(ValueError):
        Hyperparameters(s_max=10).resolve(10, 50)


def test_hyper_json_roundtrip():
    h = Hyperparameters(alpha=0.9, beta=1.2, s_max=4, seed=11)
    assert Hyperparameters.from_json(h.to_json()) == h
    with pytest.raises(ValueError):
        Hyperparameters.from_dict({"alpha": 0.5, "lambda": 1})
