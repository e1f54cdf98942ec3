"""Exact GLM likelihood machinery restricted to a configuration of columns.

A configuration is a sorted tuple of distinct 0-based column indices.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from . import kernels
from .errors import (DataError, GlmRangeError, NonConvergenceError,
                     SingularInformationError)


def as_config(indices, p=None):
    """Canonical configuration (sorted tuple of ints); rejects empties and duplicates."""
    cfg = tuple(sorted(int(j) for j in indices))
    if not cfg:
        raise ValueError("configuration must be nonempty")
    if len(set(cfg)) != len(cfg):
        raise ValueError(f"duplicate indices in configuration {cfg}")
    if cfg[0] < 0 or (p is not None and cfg[-1] >= p):
        raise ValueError(f"configuration {cfg} has indices outside [0, {p})")
    return cfg


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    column_names: tuple = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float, order="F")
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise DataError(f"design must be 2-d, got shape {X.shape}")
        n, p = X.shape
        if n < 1 or p < 1:
            raise DataError("design must have at least one row and one column")
        if y.shape[0] != n:
            raise DataError(f"response length {y.shape[0]} != {n} design rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("non-finite entries in design or response")
        names = self.column_names
        names = tuple(f"x{j + 1}" for j in range(p)) if names is None else tuple(names)
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def check_family(self, fam):
        """Raise :class:`DataError` naming the first response outside the
        family's support (observation index is 0-based)."""
        i = first_invalid_response(fam, self.y)
        if i is not None:
            raise DataError(f"{fam.family_kind} responses must be {_SUPPORT[fam.family_kind]}; "
                            f"observation {i} has y={float(self.y[i])!r}")
        return self

    @cached_property
    def log_y_factorial(self):
        return float(gammaln(self.y + 1.0).sum())

    def columns(self, config):
        return np.ascontiguousarray(self.X[:, list(config)])


_SUPPORT = {"bernoulli": "0 or 1", "poisson": "nonnegative integers"}


def first_invalid_response(fam, y):
    """Index of the first entry of ``y`` outside the family support, else None."""
    y = np.asarray(y, dtype=float)
    if fam.family_kind == "bernoulli":
        bad = ~((y == 0) | (y == 1))
    else:
        bad = ~((y >= 0) & (y == np.floor(y)))
    return int(np.argmax(bad)) if bad.any() else None


def _constant(data, fam):
    return -data.log_y_factorial if fam.family_kind == "poisson" else 0.0


def _theta(config, theta_S):
    theta_S = np.asarray(theta_S, dtype=float).reshape(-1)
    if theta_S.shape[0] != len(config):
        raise ValueError(f"theta has length {theta_S.shape[0]}, configuration {len(config)}")
    if not np.all(np.isfinite(theta_S)):
        raise ValueError("theta must be finite")
    return theta_S


def log_likelihood(data, fam, config, theta_S):
    """Full log-density sum, including the poisson ``-log y!`` terms."""
    theta_S = _theta(config, theta_S)
    ll, ok = kernels.loglik(data.columns(config), theta_S, data.y, fam.code)
    if not ok:
        raise GlmRangeError("poisson linear predictor overflow")
    return ll + _constant(data, fam)


def _terms(data, fam, config, theta_S):
    theta_S = _theta(config, theta_S)
    ll, grad, info, ok = kernels.terms(data.columns(config), theta_S, data.y, fam.code)
    if not ok:
        raise GlmRangeError("poisson linear predictor overflow")
    return ll + _constant(data, fam), grad, info


def score(data, fam, config, theta_S):
    return _terms(data, fam, config, theta_S)[1]


def observed_information(data, fam, config, theta_S):
    """Negative Hessian of the log-likelihood in ``theta_S``.

    Equals ``X_S' W X_S`` with Fisher weights for canonical links; for probit
    the observed weights include the residual curvature term.
    """
    return _terms(data, fam, config, theta_S)[2]


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8  # multiplied by n
    max_iter: int = 50
    bound: float = 30.0
    max_halvings: int = 30
    ridge: float = 1e-10

    def as_dict(self):
        return {"tol": self.tol, "max_iter": self.max_iter, "bound": self.bound,
                "max_halvings": self.max_halvings, "ridge": self.ridge}


DEFAULT_SOLVER = SolverOptions()


@dataclass(frozen=True, eq=False)
class FitResult:
    config: tuple
    theta_hat: np.ndarray
    loglik_hat: float
    info: np.ndarray
    info_chol: np.ndarray = field(repr=False, default=None)
    converged: bool = True
    degenerate: bool = False
    iterations: int = 0

    @property
    def size(self):
        return len(self.config)

    def chol(self):
        if self.info_chol is None:
            raise SingularInformationError(
                f"information at configuration {self.config} is not positive definite")
        return self.info_chol


def factor_information(info, ridge=DEFAULT_SOLVER.ridge):
    """Lower Cholesky factor of ``info`` plus a tiny relative ridge, or None."""
    k = info.shape[0]
    jitter = ridge * np.trace(info) / k
    try:
        return np.linalg.cholesky(info + jitter * np.eye(k))
    except np.linalg.LinAlgError:
        return None


def fit_response(XS, y, fam, opts=DEFAULT_SOLVER, constant=0.0, config=None):
    n = XS.shape[0]
    theta, ll, info, iters, status = kernels.newton(
        XS, y, fam.code, opts.tol * n, opts.max_iter, opts.bound,
        opts.max_halvings, opts.ridge)
    if status == kernels.SINGULAR:
        raise SingularInformationError(f"columns {config} are numerically rank deficient")
    if status == kernels.OVERFLOW:
        raise GlmRangeError("poisson linear predictor overflow at the starting point")
    if status == kernels.MAXITER:
        raise NonConvergenceError(
            f"Newton did not converge for {config} in {opts.max_iter} iterations")
    info = 0.5 * (info + info.T)
    degenerate = status == kernels.DEGENERATE
    return FitResult(config=config, theta_hat=theta, loglik_hat=ll + constant, info=info,
                     info_chol=factor_information(info, opts.ridge),
                     converged=True, degenerate=degenerate, iterations=int(iters))


def fit_mle(data, fam, config, opts=DEFAULT_SOLVER):
    """Configuration-specific MLE by safeguarded Newton from zero.

    Raises
    ------
    SingularInformationError
        ``X_S`` is numerically rank deficient.
    NonConvergenceError
        Iteration cap reached with no coordinate on the box bound.
    GlmRangeError
        Poisson overflow.
    """
    config = as_config(config, data.p)
    if len(config) > data.n:
        raise SingularInformationError(f"|S|={len(config)} exceeds n={data.n}")
    return fit_response(data.columns(config), data.y, fam, opts,
                        _constant(data, fam), config)
