"""Loop-based GLM kernels compiled with numba.

Mirrors :mod:`ebglm.kernels_numpy` function for function; see that module
for the meaning of the status codes and return tuples.
"""
import math

import numpy as np
from numba import njit

LOGIT = 0
POISSON = 1
PROBIT = 2

ETA_MAX = 700.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT1_2 = 1.0 / math.sqrt(2.0)

OK, DEGENERATE, MAXITER, SINGULAR, OVERFLOW = 0, 1, 2, 3, 4
FLAT_DECREMENT = 1e-11


@njit(cache=True)
def _log1pexp(x):
    if x > 35.0:
        return x
    if x < -35.0:
        return math.exp(x)
    return math.log1p(math.exp(x))


@njit(cache=True)
def _expit(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def _log_ndtr(x):
    if x > 6.0:
        return -0.5 * math.erfc(x * _SQRT1_2)
    if x > -37.0:
        return math.log(0.5 * math.erfc(-x * _SQRT1_2))
    x2 = x * x
    r = 1.0 / x2
    series = 1.0 - r * (1.0 - r * (3.0 - r * (15.0 - 105.0 * r)))
    return -0.5 * x2 - math.log(-x) - _HALF_LOG_2PI + math.log(series)


@njit(cache=True)
def _mills(x):
    # phi(x) / Phi(x)
    return math.exp(-0.5 * x * x - _HALF_LOG_2PI - _log_ndtr(x))


@njit(cache=True)
def row_terms(eta, y, code):
    """(loglik, d loglik / d eta, -d2 loglik / d eta2) for one row."""
    if code == LOGIT:
        mu = _expit(eta)
        return y * eta - _log1pexp(eta), y - mu, mu * (1.0 - mu)
    if code == POISSON:
        mu = math.exp(eta)
        return y * eta - mu, y - mu, mu
    lp = _mills(eta)
    lm = _mills(-eta)
    ll = y * _log_ndtr(eta) + (1.0 - y) * _log_ndtr(-eta)
    d1 = y * lp - (1.0 - y) * lm
    d2 = y * lp * (eta + lp) + (1.0 - y) * lm * (lm - eta)
    return ll, d1, d2


@njit(cache=True)
def loglik(XS, theta, y, code):
    n, k = XS.shape
    total = 0.0
    for i in range(n):
        eta = 0.0
        for j in range(k):
            eta += XS[i, j] * theta[j]
        if code == POISSON and eta > ETA_MAX:
            return -np.inf, False
        ll, _, _ = row_terms(eta, y[i], code)
        total += ll
    return total, True


@njit(cache=True)
def terms(XS, theta, y, code):
    n, k = XS.shape
    grad = np.zeros(k)
    info = np.zeros((k, k))
    total = 0.0
    for i in range(n):
        eta = 0.0
        for j in range(k):
            eta += XS[i, j] * theta[j]
        if code == POISSON and eta > ETA_MAX:
            return -np.inf, grad, info, False
        ll, d1, d2 = row_terms(eta, y[i], code)
        total += ll
        for a in range(k):
            xa = XS[i, a]
            grad[a] += d1 * xa
            wa = d2 * xa
            for b in range(a + 1):
                info[a, b] += wa * XS[i, b]
    for a in range(k):
        for b in range(a):
            info[b, a] = info[a, b]
    return total, grad, info, True


@njit(cache=True)
def cholesky(A):
    """Lower factor of a symmetric matrix; (L, ok)."""
    k = A.shape[0]
    L = np.zeros((k, k))
    for j in range(k):
        s = A[j, j]
        for m in range(j):
            s -= L[j, m] * L[j, m]
        if not s > 0.0:
            return L, False
        d = math.sqrt(s)
        L[j, j] = d
        for i in range(j + 1, k):
            t = A[i, j]
            for m in range(j):
                t -= L[i, m] * L[j, m]
            L[i, j] = t / d
    return L, True


@njit(cache=True)
def chol_solve(L, b):
    k = L.shape[0]
    z = np.empty(k)
    for i in range(k):
        t = b[i]
        for m in range(i):
            t -= L[i, m] * z[m]
        z[i] = t / L[i, i]
    x = np.empty(k)
    for i in range(k - 1, -1, -1):
        t = z[i]
        for m in range(i + 1, k):
            t -= L[m, i] * x[m]
        x[i] = t / L[i, i]
    return x


@njit(cache=True)
def _ridged_factor(info, ridge_rel):
    k = info.shape[0]
    tr = 0.0
    for j in range(k):
        tr += info[j, j]
    ridge = ridge_rel * tr / k
    if not ridge > 0.0:
        ridge = 1e-300
    A = info.copy()
    for _ in range(8):
        for j in range(k):
            A[j, j] = info[j, j] + ridge
        L, ok = cholesky(A)
        if ok:
            return L, True
        ridge *= 100.0
    return L, False


@njit(cache=True)
def _rank_deficient(info, L):
    # a pivot carried almost entirely by the ridge means collinear columns
    for j in range(info.shape[0]):
        if L[j, j] * L[j, j] <= 1e-9 * info[j, j] or not info[j, j] > 0.0:
            return True
    return False


@njit(cache=True)
def _clip(v, bound):
    out = v.copy()
    hit = False
    for j in range(v.shape[0]):
        if out[j] >= bound:
            out[j] = bound
            hit = True
        elif out[j] <= -bound:
            out[j] = -bound
            hit = True
    return out, hit


@njit(cache=True)
def newton(XS, y, code, tol, max_iter, bound, max_halvings, ridge_rel):
    """Safeguarded Newton ascent from zero; see the numpy twin for details."""
    n, k = XS.shape
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
        gnorm = 0.0
        smax = 0.0
        tmax = 0.0
        for j in range(k):
            gnorm += grad[j] * grad[j]
            smax = max(smax, abs(step[j]))
            tmax = max(tmax, abs(theta[j]))
        gnorm = math.sqrt(gnorm)
        if gnorm < tol and smax <= 1e-6 * (1.0 + tmax) and not at_bound:
            status = OK
            # the final step is inside the quadratic region; take it unchecked
            cand = theta + step
            cll, cgrad, cinfo, cok = terms(XS, cand, y, code)
            if cok and cll >= ll - FLAT_DECREMENT * (1.0 + abs(ll)):
                theta, ll, grad, info = cand, cll, cgrad, cinfo
            break
        it += 1
        # backtracking from the full step, then try expanding it
        t = 1.0
        accepted = False
        best = theta
        best_ll = ll
        best_hit = at_bound
        dec = 0.0
        for j in range(k):
            dec += grad[j] * step[j]
        tries = max_halvings + 1
        if dec <= FLAT_DECREMENT * (1.0 + abs(ll)):
            # predicted gain is below the rounding noise of ll: plain Newton
            cand, hit = _clip(theta + step, bound)
            cll, cok = loglik(XS, cand, y, code)
            if cok:
                accepted = True
                best, best_ll, best_hit = cand, cll, hit
                tries = 0
        for _ in range(tries):
            cand, hit = _clip(theta + t * step, bound)
            cll, cok = loglik(XS, cand, y, code)
            if cok and cll >= ll:
                accepted = True
                best, best_ll, best_hit = cand, cll, hit
                break
            t *= 0.5
        if accepted and t == 1.0 and best_ll > ll:
            for _ in range(8):
                t *= 2.0
                cand, hit = _clip(theta + t * step, bound)
                cll, cok = loglik(XS, cand, y, code)
                if cok and cll > best_ll:
                    best, best_ll, best_hit = cand, cll, hit
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


@njit(cache=True)
def null_score(X, y, code):
    n, p = X.shape
    g = np.zeros(p)
    for i in range(n):
        _, d1, _ = row_terms(0.0, y[i], code)
        for j in range(p):
            g[j] += d1 * X[i, j]
    return g
