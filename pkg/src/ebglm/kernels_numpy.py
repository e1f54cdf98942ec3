"""Vectorised numpy GLM kernels.

Family codes: ``LOGIT`` (bernoulli, canonical), ``POISSON`` (canonical log
link) and ``PROBIT`` (bernoulli, probit link).  Every routine works with a
column-restricted design ``XS`` of shape ``(n, k)``; ``y`` may be fractional,
which is how the population (expected-data) fits are expressed.

Status codes returned by :func:`newton`:

- ``OK``: score norm below ``tol`` and the Newton step has collapsed
- ``DEGENERATE``: a coordinate sits on the box bound and no further ascent
- ``MAXITER``: iteration cap reached away from the bound
- ``SINGULAR``: information not factorizable at the start (collinear columns)
- ``OVERFLOW``: poisson linear predictor above ``ETA_MAX`` at the start
"""
import math

import numpy as np
from scipy.special import expit, log_ndtr

LOGIT = 0
POISSON = 1
PROBIT = 2

ETA_MAX = 700.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

OK, DEGENERATE, MAXITER, SINGULAR, OVERFLOW = 0, 1, 2, 3, 4
FLAT_DECREMENT = 1e-11


def _log1pexp(x):
    return np.logaddexp(0.0, x)


def _mills(x):
    return np.exp(-0.5 * x * x - _HALF_LOG_2PI - log_ndtr(x))


def eta_terms(eta, y, code):
    """Row-wise (loglik, first derivative, negative second derivative) in eta."""
    if code == LOGIT:
        mu = expit(eta)
        return y * eta - _log1pexp(eta), y - mu, mu * (1.0 - mu)
    if code == POISSON:
        mu = np.exp(eta)
        return y * eta - mu, y - mu, mu
    lp = _mills(eta)
    lm = _mills(-eta)
    ll = y * log_ndtr(eta) + (1.0 - y) * log_ndtr(-eta)
    d1 = y * lp - (1.0 - y) * lm
    d2 = y * lp * (eta + lp) + (1.0 - y) * lm * (lm - eta)
    return ll, d1, d2


def loglik(XS, theta, y, code):
    eta = XS @ theta
    if code == POISSON and eta.size and eta.max() > ETA_MAX:
        return -np.inf, False
    ll, _, _ = eta_terms(eta, y, code)
    return float(ll.sum()), True


def terms(XS, theta, y, code):
    k = XS.shape[1]
    eta = XS @ theta
    if code == POISSON and eta.size and eta.max() > ETA_MAX:
        return -np.inf, np.zeros(k), np.zeros((k, k)), False
    ll, d1, d2 = eta_terms(eta, y, code)
    grad = XS.T @ d1
    info = XS.T @ (d2[:, None] * XS)
    info = 0.5 * (info + info.T)
    return float(ll.sum()), grad, info, True


def cholesky(A):
    try:
        return np.linalg.cholesky(A), True
    except np.linalg.LinAlgError:
        return np.zeros_like(A), False


def chol_solve(L, b):
    from scipy.linalg import solve_triangular

    z = solve_triangular(L, b, lower=True)
    return solve_triangular(L.T, z, lower=False)


def _ridged_factor(info, ridge_rel):
    k = info.shape[0]
    tr = float(np.trace(info))
    ridge = ridge_rel * tr / k
    if not ridge > 0.0:
        ridge = 1e-300
    eye = np.eye(k)
    L = np.zeros_like(info)
    for _ in range(8):
        L, ok = cholesky(info + ridge * eye)
        if ok:
            return L, True
        ridge *= 100.0
    return L, False


def _rank_deficient(info, L):
    d = np.diag(info)
    return bool(np.any(~(d > 0.0)) or np.any(np.diag(L) ** 2 <= 1e-9 * d))


def newton(XS, y, code, tol, max_iter, bound, max_halvings, ridge_rel):
    """Newton ascent on the log-likelihood from theta = 0.

    Each iteration backtracks (step halving) until the clipped candidate does
    not lower the objective, then tries doubling the step while the objective
    keeps rising; the expansion lets separated fits reach the box bound in a
    handful of iterations.

    Returns ``(theta, loglik, info, iterations, status)``.
    """
    k = XS.shape[1]
    theta = np.zeros(k)
    ll, grad, info, ok = terms(XS, theta, y, code)
    if not ok:
        return theta, ll, info, 0, OVERFLOW
    at_bound = False
    it = 0
    status = MAXITER
    while it < max_iter:
        L, ok = _ridged_factor(info, ridge_rel)
        if it == 0 and (not ok or _rank_deficient(info, L)):
            status = SINGULAR
            break
        if not ok:
            status = DEGENERATE if at_bound else MAXITER
            break
        step = chol_solve(L, grad)
        gnorm = math.sqrt(float(grad @ grad))
        tmax = float(np.abs(theta).max()) if k else 0.0
        if gnorm < tol and np.abs(step).max() <= 1e-6 * (1.0 + tmax) and not at_bound:
            status = OK
            # the final step is inside the quadratic region; take it unchecked
            cand = theta + step
            cll, cgrad, cinfo, cok = terms(XS, cand, y, code)
            if cok and cll >= ll - FLAT_DECREMENT * (1.0 + abs(ll)):
                theta, ll, grad, info = cand, cll, cgrad, cinfo
            break
        it += 1
        t = 1.0
        accepted = False
        best, best_ll, best_hit = theta, ll, at_bound
        if float(grad @ step) <= FLAT_DECREMENT * (1.0 + abs(ll)):
            # predicted gain is below the rounding noise of ll: plain Newton
            cand = np.clip(theta + step, -bound, bound)
            cll, cok = loglik(XS, cand, y, code)
            if cok:
                accepted = True
                best, best_ll, best_hit = cand, cll, bool(np.any(np.abs(cand) >= bound))
        for _ in range(0 if accepted else max_halvings + 1):
            cand = np.clip(theta + t * step, -bound, bound)
            cll, cok = loglik(XS, cand, y, code)
            if cok and cll >= ll:
                accepted = True
                best, best_ll, best_hit = cand, cll, bool(np.any(np.abs(cand) >= bound))
                break
            t *= 0.5
        if accepted and t == 1.0 and best_ll > ll:
            for _ in range(8):
                t *= 2.0
                cand = np.clip(theta + t * step, -bound, bound)
                cll, cok = loglik(XS, cand, y, code)
                if cok and cll > best_ll:
                    best, best_ll, best_hit = cand, cll, bool(np.any(np.abs(cand) >= bound))
                else:
                    break
        if not accepted:
            if gnorm < tol:
                status = OK
            elif at_bound:
                status = DEGENERATE
            else:
                status = MAXITER
            break
        gain = max(best_ll - ll, 0.0)
        theta = best
        at_bound = best_hit
        ll, grad, info, ok = terms(XS, theta, y, code)
        if at_bound and gain <= 1e-12 * (1.0 + abs(ll)):
            status = DEGENERATE
            break
    if status == MAXITER and at_bound:
        status = DEGENERATE
    return theta, ll, info, it, status


def null_score(X, y, code):
    _, d1, _ = eta_terms(np.zeros(X.shape[0]), y, code)
    return X.T @ d1
