"""Empirical prior: complexity prior on configurations and the data-centred
Gaussian conditional prior on the active coefficients."""
import json
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln


@dataclass(frozen=True)
class Hyperparameters:
    """Posterior tuning constants.

    ``beta=None`` and ``s_max=None`` are resolved against the data size by
    :meth:`resolve`: ``beta = 1.01 + 0.5 log(n) / log(p)`` and
    ``s_max = floor(min(n / 2, p))``.
    """

    alpha: float = 0.999
    beta: float = None
    gamma: float = 1.0
    s_max: int = None
    samples: int = 10_000
    burnin: float = 0.2
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.beta is not None and not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.s_max is not None and self.s_max < 1:
            raise ValueError(f"s_max must be >= 1, got {self.s_max}")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not 0.0 <= self.burnin < 1.0:
            raise ValueError(f"burnin must lie in [0, 1), got {self.burnin}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def resolve(self, n, p):
        beta = self.beta
        if beta is None:
            beta = 1.01 + 0.5 * math.log(n) / math.log(p) if p > 1 else 1.01
        s_max = self.s_max
        if s_max is None:
            s_max = max(1, min(n // 2, p))
        if s_max > min(n - 1, p):
            raise ValueError(f"s_max={s_max} exceeds min(n-1, p)={min(n - 1, p)}")
        return replace(self, beta=float(beta), s_max=int(s_max))

    @property
    def total_steps(self):
        return math.ceil(self.samples / (1.0 - self.burnin))

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown hyperparameter keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in doc.items() if v is not None})

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def log_binomial(p, s):
    return gammaln(p + 1.0) - gammaln(s + 1.0) - gammaln(p - s + 1.0)


def log_config_prior(p, s, beta, s_max):
    """Unnormalised log mass ``-log C(p, s) - beta s log p``; ``-inf`` past ``s_max``."""
    if not 1 <= s <= p:
        raise ValueError(f"configuration size {s} outside [1, {p}]")
    if s > s_max:
        return -math.inf
    return float(-log_binomial(p, s) - beta * s * math.log(p))


def log_conditional_prior_density(fit, theta_S, gamma):
    """Log N(theta_S | theta_hat, gamma J^{-1}) via the stored Cholesky factor."""
    L = fit.chol()
    k = fit.size
    u = np.asarray(theta_S, dtype=float) - fit.theta_hat
    z = L.T @ u
    logdet_info = 2.0 * np.log(np.diag(L)).sum()
    return float(-0.5 * k * math.log(2.0 * math.pi * gamma) + 0.5 * logdet_info
                 - 0.5 * (z @ z) / gamma)


def gaussian_draw(fit, scale, rng, size=None):
    """theta_hat + sqrt(scale) L^{-T} z, z standard normal."""
    L = fit.chol()
    k = fit.size
    shape = (k,) if size is None else (size, k)
    z = rng.standard_normal(shape)
    u = solve_triangular(L.T, z.T, lower=False).T
    return fit.theta_hat + math.sqrt(scale) * u


def sample_conditional_prior(fit, gamma, rng, size=None):
    return gaussian_draw(fit, gamma, rng, size)
