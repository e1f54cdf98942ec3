"""Empirical-Bayes variable selection and estimation for sparse GLMs."""
__version__ = "0.1.0"

from ._accel import BACKEND
from .errors import (DataError, EbglmError, GlmRangeError, NonConvergenceError,
                     SingularInformationError, UnsupportedError)
from .families import LOGISTIC, POISSON, PROBIT, GlmFamily, eval_family, get_family, weight
from .glm import (Dataset, FitResult, SolverOptions, as_config, fit_mle, log_likelihood,
                  observed_information, score)
from .prior import (Hyperparameters, log_conditional_prior_density, log_config_prior,
                    sample_conditional_prior)
from .posterior import (ConfigScore, EnumeratedPosterior, ScoreCache,
                        conditional_posterior_draw, enumerate_posterior,
                        log_marginal_laplace, log_marginal_quadrature, score_configuration)
from .sampler import (ChainResult, SelectionReport, estimate_coefficients,
                      inclusion_probabilities, mh_step, predict, propose_flip, run_chain,
                      select, sss_search)

__all__ = [
    "__version__",
    "BACKEND",
    "DataError",
    "EbglmError",
    "GlmRangeError",
    "NonConvergenceError",
    "SingularInformationError",
    "UnsupportedError",
    "LOGISTIC",
    "POISSON",
    "PROBIT",
    "GlmFamily",
    "eval_family",
    "get_family",
    "weight",
    "Dataset",
    "FitResult",
    "SolverOptions",
    "as_config",
    "fit_mle",
    "log_likelihood",
    "observed_information",
    "score",
    "Hyperparameters",
    "log_conditional_prior_density",
    "log_config_prior",
    "sample_conditional_prior",
    "ConfigScore",
    "EnumeratedPosterior",
    "ScoreCache",
    "conditional_posterior_draw",
    "enumerate_posterior",
    "log_marginal_laplace",
    "log_marginal_quadrature",
    "score_configuration",
    "ChainResult",
    "SelectionReport",
    "estimate_coefficients",
    "inclusion_probabilities",
    "mh_step",
    "predict",
    "propose_flip",
    "run_chain",
    "select",
    "sss_search",
]
