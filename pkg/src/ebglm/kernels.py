"""Kernel dispatch: numba when available and not disabled, numpy otherwise."""
from ._accel import BACKEND, USE_NUMBA

if USE_NUMBA:
    from . import kernels_numba as _impl
else:
    from . import kernels_numpy as _impl

LOGIT = _impl.LOGIT
POISSON = _impl.POISSON
PROBIT = _impl.PROBIT
ETA_MAX = _impl.ETA_MAX
OK, DEGENERATE, MAXITER, SINGULAR, OVERFLOW = (
    _impl.OK, _impl.DEGENERATE, _impl.MAXITER, _impl.SINGULAR, _impl.OVERFLOW)

loglik = _impl.loglik
terms = _impl.terms
newton = _impl.newton
null_score = _impl.null_score

__all__ = ["BACKEND", "loglik", "terms", "newton", "null_score",
           "LOGIT", "POISSON", "PROBIT", "ETA_MAX"]
