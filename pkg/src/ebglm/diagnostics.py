"""Runnable versions of the theoretical objects: Hellinger distance,
KL projections, restricted eigenvalues, beta-min, sparse singular values,
and the Bernstein-von Mises comparison."""
import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .glm import SolverOptions, as_config, fit_response
from .errors import UnsupportedError
from .posterior import bvm_scale, conditional_posterior_draw

_BRUTE_FORCE_P = 15
KL_SOLVER = SolverOptions(tol=1e-13, max_iter=100)


def _guard(p, what):
    if p > _BRUTE_FORCE_P:
        raise UnsupportedError(f"{what} enumerates supports and needs p <= {_BRUTE_FORCE_P}, got {p}")


def hellinger_distance(X, fam, theta_star, theta):
    """Root of the row-averaged squared Hellinger distance.

    Uses the halved convention ``1 - sum_y sqrt(p q)`` per observation, so
    the result lies in [0, 1].
    """
    X = np.asarray(X, dtype=float)
    lp1 = X @ np.asarray(theta_star, dtype=float)
    lp2 = X @ np.asarray(theta, dtype=float)
    if fam.family_kind == "poisson":
        lam1 = fam.inv_link(lp1)
        lam2 = fam.inv_link(lp2)
        h2 = -np.expm1(-0.5 * (np.sqrt(lam1) - np.sqrt(lam2)) ** 2)
    else:
        p1, p2 = fam.inv_link(lp1), fam.inv_link(lp2)
        h2 = 1.0 - (np.sqrt(p1 * p2) + np.sqrt((1.0 - p1) * (1.0 - p2)))
    return float(math.sqrt(max(float(np.mean(h2)), 0.0)))


def kl_projection(X, fam, theta_star, config, opts=KL_SOLVER):
    """Solve the population score equation for ``config`` (expected data in
    place of ``y``)."""
    X = np.asarray(X, dtype=float)
    config = as_config(config, X.shape[1])
    mean = fam.inv_link(X @ np.asarray(theta_star, dtype=float))
    fit = fit_response(np.ascontiguousarray(X[:, list(config)]), mean, fam, opts, 0.0, config)
    return fit.theta_hat


def population_score(X, fam, theta_star, config, theta_S):
    X = np.asarray(X, dtype=float)
    XS = X[:, list(config)]
    lin = XS @ theta_S
    resid = fam.inv_link(X @ theta_star) - fam.inv_link(lin)
    # (mu* - mu)' diag(xi') X_S, written with u' / b''(eta) for non-canonical links
    return XS.T @ (resid * fam.xi_dot(lin) if fam.canonical else
                   resid * fam.inv_link_dot(lin) / (fam.inv_link(lin) * (1.0 - fam.inv_link(lin))))


def restricted_eigenvalues(X, fam, theta_star, k):
    """Extreme eigenvalues of n^{-1} J_n(S, theta_S^dagger) over all 1 <= |S| <= k."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    _guard(p, "restricted_eigenvalues")
    lo, hi = math.inf, -math.inf
    for s in range(1, min(k, p) + 1):
        for config in itertools.combinations(range(p), s):
            theta = kl_projection(X, fam, theta_star, config)
            XS = X[:, list(config)]
            w = fam.weight(XS @ theta)
            ev = np.linalg.eigvalsh(XS.T @ (w[:, None] * XS) / n)
            lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    return {"lambda_min": float(lo), "lambda_max": float(hi)}


def beta_min_check(theta_star, n, p, Lambda_at, c):
    """Compare the smallest squared active coefficient with
    ``c n^{-1} |S*| Lambda log p``."""
    if not c > 1.0:
        raise ValueError(f"c must exceed 1, got {c}")
    theta_star = np.asarray(theta_star, dtype=float)
    active = theta_star[theta_star != 0.0]
    if active.size == 0:
        raise ValueError("theta_star has no active coefficients")
    threshold = c * active.size * Lambda_at * math.log(p) / n
    margin = float(np.min(active ** 2) - threshold)
    return {"satisfied": margin >= 0.0, "margin": margin, "threshold": float(threshold)}


def sparse_singular_value(X, W_diag, s):
    """min over supports 1 <= |S| <= s of sigma_min(n^{-1/2} W^{1/2} X_S)."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    _guard(p, "sparse_singular_value")
    A = np.sqrt(np.asarray(W_diag, dtype=float))[:, None] * X / math.sqrt(n)
    best = math.inf
    for size in range(1, min(s, p) + 1):
        for config in itertools.combinations(range(p), size):
            sv = np.linalg.svd(A[:, list(config)], compute_uv=False)
            best = min(best, float(sv[-1]))
    return best


@dataclass
class BvmComparison:
    mean_gap: float
    cov_gap: float
    rho: float
    draws: int
    mean_gap_se: float
    cov_gap_se: float


def _gaps(draws, mean, cov):
    m = draws.mean(axis=0)
    c = np.atleast_2d(np.cov(draws, rowvar=False))
    mean_gap = np.linalg.norm(m - mean) / np.linalg.norm(mean)
    cov_gap = np.linalg.norm(c - cov) / np.linalg.norm(cov)
    return float(mean_gap), float(cov_gap)


def bvm_compare(chain, cache, true_config, hyper, rng, bootstrap=100):
    """Moment gaps between coefficient draws along the chain and the
    limiting Gaussian at the true configuration.

    Draws are taken at every retained sample equal to ``true_config``.
    Standard errors come from a nonparametric bootstrap over those draws.
    """
    cache = chain.cache if cache is None else cache
    true_config = as_config(true_config)
    visits = int(sum(1 for sid in chain.trace if chain.states[sid] == true_config))
    if visits < 2:
        raise ValueError(f"chain visits the true configuration {visits} times; "
                         "comparison undefined")
    fit = cache.fit(true_config)
    rho = bvm_scale(hyper.alpha, hyper.gamma)
    draws = conditional_posterior_draw(fit, hyper.alpha, hyper.gamma, rng, size=visits)
    cov = rho * np.linalg.inv(fit.info)
    mean_gap, cov_gap = _gaps(draws, fit.theta_hat, cov)
    boot = np.array([_gaps(draws[rng.integers(visits, size=visits)], fit.theta_hat, cov)
                     for _ in range(bootstrap)])
    se = boot.std(axis=0, ddof=1) if bootstrap > 1 else np.full(2, np.nan)
    return BvmComparison(mean_gap, cov_gap, rho, visits, float(se[0]), float(se[1]))


@dataclass
class TheoryReport:
    hellinger: float
    epsilon_n: float
    lambda_min_restricted: float = None
    lambda_max_restricted: float = None
    beta_min_satisfied: bool = None
    beta_min_margin: float = None
    phi_sparse: float = None
    bvm_mean_gap: float = None
    bvm_cov_gap: float = None
    rho: float = None
    notes: tuple = ()

    def to_dict(self):
        doc = asdict(self)
        doc["notes"] = list(self.notes)
        return doc


def theory_report(data, fam, theta_star, chain, hyper, rng, c=2.0, k=None):
    """Assemble a :class:`TheoryReport` for a fitted chain and known truth.

    Brute-force entries (restricted eigenvalues, beta-min, sparse singular
    value) are left empty when ``p`` exceeds the enumeration guard.
    """
    from .sampler import estimate_coefficients

    theta_star = np.asarray(theta_star, dtype=float)
    n, p = data.n, data.p
    truth = tuple(int(j) for j in np.flatnonzero(theta_star))
    s_star = len(truth)
    notes = []
    est = estimate_coefficients(chain)
    report = TheoryReport(hellinger=hellinger_distance(data.X, fam, theta_star, est),
                          epsilon_n=math.sqrt(max(s_star, 1) * math.log(p) / n),
                          rho=bvm_scale(hyper.alpha, hyper.gamma))
    k = min(p, max(1, 2 * s_star)) if k is None else k
    if p <= _BRUTE_FORCE_P:
        eig = restricted_eigenvalues(data.X, fam, theta_star, k)
        report.lambda_min_restricted = eig["lambda_min"]
        report.lambda_max_restricted = eig["lambda_max"]
        if s_star:
            bm = beta_min_check(theta_star, n, p, eig["lambda_max"], c)
            report.beta_min_satisfied = bm["satisfied"]
            report.beta_min_margin = bm["margin"]
        report.phi_sparse = sparse_singular_value(
            data.X, fam.weight(data.X @ theta_star), k)
    else:
        notes.append(f"p={p} exceeds {_BRUTE_FORCE_P}: brute-force diagnostics skipped")
    if s_star:
        try:
            bvm = bvm_compare(chain, None, truth, hyper, rng)
            report.bvm_mean_gap, report.bvm_cov_gap = bvm.mean_gap, bvm.cov_gap
        except (ValueError, KeyError) as exc:
            notes.append(f"bvm comparison skipped: {exc}")
    report.notes = tuple(notes)
    return report
