import sys

import numpy as np
import pytest

from ebglm import LOGISTIC, POISSON, PROBIT, ChainResult, Dataset, Hyperparameters

FAMILIES = {"logistic": LOGISTIC, "poisson": POISSON, "probit": PROBIT}


def make_data(fam, n, p, rng, theta=None, scale=1.0):
    """Gaussian design, response drawn from ``fam`` at ``theta`` (default zero)."""
    X = scale * rng.standard_normal((n, p))
    theta = np.zeros(p) if theta is None else np.asarray(theta, dtype=float)
    y = fam.sample(X @ theta, rng)
    return Dataset(X, y)


def sparse_instance(fam, n, p, active, coef, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    theta = np.zeros(p)
    theta[list(active)] = coef
    return make_data(fam, n, p, rng, theta, scale), theta


def hand_chain(states, trace, p, cache=None):
    return ChainResult(states=list(states), log_scores=np.zeros(len(states)),
                       trace=np.asarray(trace), acceptance_rate=0.0,
                       initial_config=states[0], hyper=Hyperparameters(), p=p, cache=cache)


@pytest.fixture(params=sorted(FAMILIES))
def family(request):
    return FAMILIES[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
