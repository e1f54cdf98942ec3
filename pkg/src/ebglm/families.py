"""Response families: cumulant, mean/variance maps, link and Fisher weight.

``eta`` always denotes the natural parameter and ``lin_pred`` the linear
predictor ``x' theta``; they coincide for canonical links.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_ndtr, ndtr

from . import kernels
from .errors import GlmRangeError

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _check_poisson(eta):
    if np.any(np.asarray(eta) > kernels.ETA_MAX):
        raise GlmRangeError(
            f"poisson natural parameter exceeds {kernels.ETA_MAX:g}; exp() overflows")


@dataclass(frozen=True)
class GlmFamily:
    family_kind: str  # "bernoulli" | "poisson"
    link_kind: str = "canonical"  # "canonical" | "probit"

    def __post_init__(self):
        if self.family_kind not in ("bernoulli", "poisson"):
            raise ValueError(f"unknown family {self.family_kind!r}")
        if self.link_kind not in ("canonical", "probit"):
            raise ValueError(f"unknown link {self.link_kind!r}")
        if self.family_kind == "poisson" and self.link_kind != "canonical":
            raise ValueError("poisson supports the canonical log link only")

    @property
    def code(self):
        if self.family_kind == "poisson":
            return kernels.POISSON
        return kernels.PROBIT if self.link_kind == "probit" else kernels.LOGIT

    @property
    def name(self):
        return {kernels.LOGIT: "logistic", kernels.POISSON: "poisson",
                kernels.PROBIT: "probit"}[self.code]

    @property
    def canonical(self):
        return self.link_kind == "canonical"

    # cumulant and derivatives, in the natural parameter
    def b(self, eta):
        if self.family_kind == "poisson":
            _check_poisson(eta)
            return np.exp(eta)
        return np.logaddexp(0.0, eta)

    def b_dot(self, eta):
        if self.family_kind == "poisson":
            _check_poisson(eta)
            return np.exp(eta)
        return expit(eta)

    def b_ddot(self, eta):
        if self.family_kind == "poisson":
            _check_poisson(eta)
            return np.exp(eta)
        mu = expit(eta)
        return mu * (1.0 - mu)

    # link side, in the linear predictor
    def natural_param(self, lin_pred):
        if self.link_kind == "probit":
            return log_ndtr(lin_pred) - log_ndtr(-np.asarray(lin_pred, dtype=float))
        return np.asarray(lin_pred, dtype=float)

    def inv_link(self, lin_pred):
        """Mean response u = h^{-1}(x' theta)."""
        if self.link_kind == "probit":
            return ndtr(lin_pred)
        return self.b_dot(lin_pred)

    def inv_link_dot(self, lin_pred):
        if self.link_kind == "probit":
            lin_pred = np.asarray(lin_pred, dtype=float)
            return np.exp(-0.5 * lin_pred ** 2) / _SQRT_2PI
        return self.b_ddot(lin_pred)

    def xi_dot(self, lin_pred):
        """Derivative factor of the natural parameter in the linear predictor."""
        lin_pred = np.asarray(lin_pred, dtype=float)
        if self.canonical:
            return np.ones_like(lin_pred)
        # phi / (Phi (1 - Phi)) on the log scale
        return np.exp(-0.5 * lin_pred ** 2 - 0.5 * np.log(2.0 * np.pi)
                      - log_ndtr(lin_pred) - log_ndtr(-lin_pred))

    def weight(self, lin_pred):
        """Fisher weight w = u'(x' theta) * xi'(x' theta)."""
        if self.canonical:
            return self.b_ddot(lin_pred)
        lin_pred = np.asarray(lin_pred, dtype=float)
        # phi^2 / (Phi (1 - Phi)) on the log scale to survive the tails
        return np.exp(-lin_pred ** 2 - np.log(2.0 * np.pi)
                      - log_ndtr(lin_pred) - log_ndtr(-lin_pred))

    def sample(self, lin_pred, rng):
        mean = self.inv_link(lin_pred)
        if self.family_kind == "poisson":
            return rng.poisson(mean).astype(float)
        return (rng.random(np.shape(mean)) < mean).astype(float)


LOGISTIC = GlmFamily("bernoulli", "canonical")
POISSON = GlmFamily("poisson", "canonical")
PROBIT = GlmFamily("bernoulli", "probit")

_BY_NAME = {"logistic": LOGISTIC, "logit": LOGISTIC, "bernoulli": LOGISTIC,
            "poisson": POISSON, "probit": PROBIT}


def get_family(name):
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from logistic, poisson, probit") from None


def eval_family(fam, eta):
    """Cumulant ``b`` and its first two derivatives at ``eta``."""
    return {"b": float(fam.b(eta)), "b_dot": float(fam.b_dot(eta)),
            "b_ddot": float(fam.b_ddot(eta))}


def weight(fam, lin_pred):
    return float(fam.weight(lin_pred))
