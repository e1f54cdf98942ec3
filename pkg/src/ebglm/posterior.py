"""Fractional-likelihood posterior over configurations.

The configuration score is the log of the complexity prior times the Laplace
form of the marginal likelihood,
``log pi(S) - |S|/2 log(1 + alpha gamma) + alpha loglik(S, theta_hat_S)``.
"""
import itertools
import json
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, roots_hermite

from . import kernels_numpy
from .errors import (GlmRangeError, NonConvergenceError,
                     SingularInformationError, UnsupportedError)
from .glm import DEFAULT_SOLVER, as_config, fit_mle
from .prior import gaussian_draw, log_config_prior

FIT_FAILURES = (SingularInformationError, NonConvergenceError, GlmRangeError)


def log_marginal_laplace(fit, alpha, gamma):
    return -0.5 * fit.size * math.log1p(alpha * gamma) + alpha * fit.loglik_hat


def log_marginal_quadrature(data, fam, fit, alpha, gamma, nodes=64, chunk=8192):
    """Gauss-Hermite evaluation of the log marginal likelihood.

    The rule is centred at ``theta_hat`` and scaled by the curvature of the
    Laplace integrand, ``gamma / (1 + alpha gamma) J^{-1}``; only the ratio to
    that Gaussian is integrated numerically, so a quadratic log-likelihood is
    reproduced exactly.
    """
    k = fit.size
    if k > 3:
        raise UnsupportedError(f"quadrature limited to |S| <= 3, got {k}")
    try:
        L = np.linalg.cholesky(fit.info)
    except np.linalg.LinAlgError:
        raise SingularInformationError("information not positive definite") from None
    z1, w1 = roots_hermite(nodes)
    grids = np.meshgrid(*([z1] * k), indexing="ij")
    Z = np.stack([g.ravel() for g in grids], axis=1)
    logw = sum(np.log(np.meshgrid(*([w1] * k), indexing="ij")[j].ravel()) for j in range(k))
    logw = logw - 0.5 * k * math.log(math.pi)
    shrink = alpha * gamma / (1.0 + alpha * gamma)
    scale = math.sqrt(2.0 * gamma / (1.0 + alpha * gamma))
    # theta = theta_hat + scale * L^{-T} z
    U = np.linalg.solve(L.T, Z.T).T * scale
    XS = data.columns(fit.config)
    raw_ll = fit.loglik_hat + (data.log_y_factorial if fam.family_kind == "poisson" else 0.0)
    terms = np.empty(Z.shape[0])
    for start in range(0, Z.shape[0], chunk):
        sl = slice(start, start + chunk)
        theta = fit.theta_hat[None, :] + U[sl]
        eta = XS @ theta.T
        with np.errstate(over="ignore", invalid="ignore"):
            ll, _, _ = kernels_numpy.eta_terms(eta, data.y[:, None], fam.code)
            ll = ll.sum(axis=0)
        ll = np.where(np.isfinite(ll), ll, -np.inf)
        terms[sl] = logw[sl] + alpha * (ll - raw_ll) + shrink * (Z[sl] ** 2).sum(axis=1)
    return float(logsumexp(terms)) + log_marginal_laplace(fit, alpha, gamma)


@dataclass(frozen=True, eq=False)
class ConfigScore:
    config: tuple
    log_unnorm_posterior: float
    fit: object = None
    failed: bool = False


class ScoreCache:
    """Per-run map from configuration to its :class:`ConfigScore`.

    ``get_or_compute`` is atomic with respect to the map; two threads may
    fit the same configuration concurrently but only the first result is
    stored, and both results are identical because fits are deterministic.
    """

    def __init__(self):
        self._scores = {}
        self._lock = threading.Lock()
        self.fits = 0

    def __len__(self):
        return len(self._scores)

    def __contains__(self, config):
        return config in self._scores

    def get(self, config):
        return self._scores.get(config)

    def get_or_compute(self, config, compute):
        hit = self._scores.get(config)
        if hit is not None:
            return hit
        value = compute()
        with self._lock:
            self.fits += 1
            return self._scores.setdefault(config, value)

    def configs(self):
        return list(self._scores)

    def fit(self, config):
        entry = self._scores.get(config)
        if entry is None or entry.fit is None:
            raise KeyError(f"no cached fit for configuration {config}")
        return entry.fit


def compose_score(fit, p, hyper):
    return (log_config_prior(p, fit.size, hyper.beta, hyper.s_max)
            + log_marginal_laplace(fit, hyper.alpha, hyper.gamma))


def score_configuration(data, fam, config, hyper, cache=None, opts=DEFAULT_SOLVER):
    """Unnormalised log posterior of ``config``; ``-inf`` outside the prior
    support or when the fit fails (recorded with ``failed=True``)."""
    config = as_config(config, data.p)
    if len(config) > hyper.s_max:
        return ConfigScore(config, -math.inf)

    def compute():
        try:
            fit = fit_mle(data, fam, config, opts)
        except FIT_FAILURES:
            return ConfigScore(config, -math.inf, None, True)
        return ConfigScore(config, compose_score(fit, data.p, hyper), fit)

    if cache is None:
        return compute()
    return cache.get_or_compute(config, compute)


@dataclass(frozen=True)
class EnumeratedPosterior:
    entries: list  # (config, probability)
    normalizer: float
    p: int

    def probability(self, config):
        config = as_config(config)
        for c, prob in self.entries:
            if c == config:
                return prob
        return 0.0

    def as_dict(self):
        return {c: prob for c, prob in self.entries}

    def inclusion(self):
        incl = np.zeros(self.p)
        for c, prob in self.entries:
            incl[list(c)] += prob
        return incl

    def mode(self):
        return max(self.entries, key=lambda e: e[1])[0]

    def to_json(self, column_names=None):
        rows = [{"indices": list(c), "probability": prob} for c, prob in self.entries]
        if column_names is not None:
            for row in rows:
                row["names"] = [column_names[j] for j in row["indices"]]
        return {"entries": rows, "log_normalizer": self.normalizer}


def enumerate_posterior(data, fam, hyper, opts=DEFAULT_SOLVER, cache=None):
    """Exact normalisation of the configuration posterior at toy scale."""
    p = data.p
    if p > 15 or hyper.s_max > 4:
        raise UnsupportedError(
            f"enumeration needs p <= 15 and s_max <= 4 (got p={p}, s_max={hyper.s_max})")
    cache = ScoreCache() if cache is None else cache
    configs = [c for s in range(1, hyper.s_max + 1)
               for c in itertools.combinations(range(p), s)]
    logs = np.array([score_configuration(data, fam, c, hyper, cache, opts).log_unnorm_posterior
                     for c in configs])
    norm = float(logsumexp(logs))
    probs = np.exp(logs - norm)
    return EnumeratedPosterior([(c, float(q)) for c, q in zip(configs, probs)], norm, p)


def bvm_scale(alpha, gamma):
    """Variance multiplier gamma / (1 + alpha gamma) of the limiting Gaussian."""
    return gamma / (1.0 + alpha * gamma)


def conditional_posterior_draw(fit, alpha, gamma, rng, size=None):
    """Draw theta_S ~ N(theta_hat, rho J^{-1}), rho = gamma / (1 + alpha gamma).

    This is the Gaussian limit of the conditional posterior, used in place of
    an exact rejection sampler.
    """
    return gaussian_draw(fit, bvm_scale(alpha, gamma), rng, size)


def dump_enumeration(post, path, column_names=None):
    with open(path, "w") as fh:
        json.dump(post.to_json(column_names), fh, indent=2)
