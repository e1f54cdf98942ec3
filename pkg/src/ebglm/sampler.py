"""Metropolis-Hastings over configurations and the summaries built on it."""
import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .glm import DEFAULT_SOLVER
from .posterior import ScoreCache, conditional_posterior_draw, score_configuration
from .prior import Hyperparameters


@dataclass(eq=False)
class ChainResult:
    """Retained chain states.

    ``states`` lists every configuration the run scored (in first-visit
    order) with ``log_scores`` alongside; ``trace[m]`` is the state id of
    the ``m``-th retained sample.
    """

    states: list
    log_scores: np.ndarray
    trace: np.ndarray
    acceptance_rate: float
    initial_config: tuple
    hyper: Hyperparameters
    p: int
    cache: ScoreCache = field(repr=False, default=None)

    @property
    def samples(self):
        return [self.states[i] for i in self.trace]

    @property
    def visited(self):
        return set(self.states)

    def __len__(self):
        return len(self.trace)

    def counts(self):
        return np.bincount(self.trace, minlength=len(self.states))

    def frequencies(self):
        """Empirical configuration distribution, {config: frequency}."""
        counts = self.counts()
        total = counts.sum()
        return {self.states[i]: c / total for i, c in enumerate(counts) if c}

    def best(self):
        """Highest-scoring configuration the run evaluated."""
        return self.states[int(np.argmax(self.log_scores))]


def _toggle(config, j):
    if j in config:
        return tuple(i for i in config if i != j)
    lst = list(config)
    bisect.insort(lst, j)
    return tuple(lst)


def propose_flip(current, p, rng):
    """Toggle one index chosen uniformly from ``range(p)``; may return ()."""
    return _toggle(current, int(rng.integers(p)))


def _accept(log_new, log_cur, log_u):
    if log_new == -math.inf:
        return False
    return log_new >= log_cur or log_u < log_new - log_cur


def mh_step(current, data, fam, hyper, cache, rng, opts=DEFAULT_SOLVER):
    """One Metropolis-Hastings transition; returns ``current`` itself on rejection."""
    proposal = propose_flip(current.config, data.p, rng)
    if not proposal or len(proposal) > hyper.s_max:
        return current
    cand = score_configuration(data, fam, proposal, hyper, cache, opts)
    if _accept(cand.log_unnorm_posterior, current.log_unnorm_posterior, math.log(rng.random())):
        return cand
    return current


def initial_configuration(data, fam, hyper, cache, opts=DEFAULT_SOLVER):
    """Singleton with the largest absolute null-model score that fits."""
    g = np.abs(kernels.null_score(np.ascontiguousarray(data.X), data.y, fam.code))
    for j in np.argsort(-g, kind="stable"):
        sc = score_configuration(data, fam, (int(j),), hyper, cache, opts)
        if sc.log_unnorm_posterior > -math.inf:
            return sc
    raise ValueError("no single-column configuration has a finite posterior score")


def run_chain(data, fam, hyper, rng, cache=None, opts=DEFAULT_SOLVER, initial=None):
    """Random-scan single-flip Metropolis-Hastings.

    Runs ``ceil(samples / (1 - burnin))`` steps and keeps the last
    ``samples`` states, rejected moves repeating the current state.
    ``hyper`` must already be resolved (``beta`` and ``s_max`` set).
    """
    if hyper.beta is None or hyper.s_max is None:
        hyper = hyper.resolve(data.n, data.p)
    cache = ScoreCache() if cache is None else cache
    p, s_max = data.p, hyper.s_max
    total = hyper.total_steps
    keep = hyper.samples
    burn = total - keep

    if initial is None:
        start = initial_configuration(data, fam, hyper, cache, opts)
    else:
        start = score_configuration(data, fam, initial, hyper, cache, opts)

    states, scores, by_mask = [], [], {}

    def register(config, mask, log_score):
        by_mask[mask] = len(states)
        states.append(config)
        scores.append(log_score)
        return len(states) - 1

    cur = start.config
    cur_mask = sum(1 << j for j in cur)
    cur_id = register(cur, cur_mask, start.log_unnorm_posterior)
    cur_ls = start.log_unnorm_posterior
    cur_size = len(cur)

    flips = rng.integers(p, size=total)
    log_u = np.log(rng.random(total))
    trace = np.empty(keep, dtype=np.int64)
    accepted = 0
    for t in range(total):
        j = int(flips[t])
        bit = 1 << j
        new_size = cur_size - 1 if cur_mask & bit else cur_size + 1
        if 0 < new_size <= s_max:
            new_mask = cur_mask ^ bit
            sid = by_mask.get(new_mask)
            if sid is None:
                config = _toggle(cur, j)
                sc = score_configuration(data, fam, config, hyper, cache, opts)
                sid = register(config, new_mask, sc.log_unnorm_posterior)
            ls = scores[sid]
            if _accept(ls, cur_ls, log_u[t]):
                accepted += 1
                cur, cur_mask, cur_id, cur_ls, cur_size = states[sid], new_mask, sid, ls, new_size
        if t >= burn:
            trace[t - burn] = cur_id
    return ChainResult(states=states, log_scores=np.array(scores), trace=trace,
                       acceptance_rate=accepted / total, initial_config=start.config,
                       hyper=hyper, p=p, cache=cache)


def inclusion_probabilities(chain, p=None):
    p = chain.p if p is None else p
    counts = chain.counts()
    incl = np.zeros(p)
    for sid in np.flatnonzero(counts):
        incl[list(chain.states[sid])] += counts[sid]
    return incl / len(chain.trace)


def select(inclusion, t):
    """Indices whose inclusion probability strictly exceeds ``t`` (may be empty)."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    return tuple(int(j) for j in np.flatnonzero(np.asarray(inclusion) > t))


def estimate_coefficients(chain, cache=None, p=None):
    """Sample-frequency average of configuration MLEs, embedded in R^p."""
    cache = chain.cache if cache is None else cache
    p = chain.p if p is None else p
    counts = chain.counts()
    est = np.zeros(p)
    for sid in np.flatnonzero(counts):
        config = chain.states[sid]
        est[list(config)] += counts[sid] * cache.fit(config).theta_hat
    return est / len(chain.trace)


def predict(chain, cache, fam, new_X, hyper, rng):
    """Posterior predictive draws, one per retained sample.

    Returns an array of shape ``(n_new, M)``; column ``m`` uses the ``m``-th
    retained configuration with coefficients from the Gaussian conditional
    draw.
    """
    cache = chain.cache if cache is None else cache
    new_X = np.asarray(new_X, dtype=float)
    if new_X.ndim != 2 or new_X.shape[1] != chain.p:
        raise ValueError(f"new_X must have {chain.p} columns")
    out = np.empty((new_X.shape[0], len(chain.trace)))
    counts = chain.counts()
    for sid in np.flatnonzero(counts):
        config = chain.states[sid]
        cols = np.flatnonzero(chain.trace == sid)
        theta = conditional_posterior_draw(cache.fit(config), hyper.alpha, hyper.gamma,
                                           rng, size=len(cols))
        lin = new_X[:, list(config)] @ theta.T
        out[:, cols] = fam.sample(lin, rng)
    return out


def sss_search(data, fam, hyper, rng, iterations, cache=None, opts=DEFAULT_SOLVER,
               initial=None):
    """Shotgun stochastic search: score every admissible single-flip
    neighbour and move to one with probability proportional to its
    posterior weight."""
    if hyper.beta is None or hyper.s_max is None:
        hyper = hyper.resolve(data.n, data.p)
    cache = ScoreCache() if cache is None else cache
    if initial is None:
        cur = initial_configuration(data, fam, hyper, cache, opts)
    else:
        cur = score_configuration(data, fam, initial, hyper, cache, opts)
    start = cur.config
    index, states, scores = {}, [], []

    def register(sc):
        sid = index.get(sc.config)
        if sid is None:
            sid = index[sc.config] = len(states)
            states.append(sc.config)
            scores.append(sc.log_unnorm_posterior)
        return sid

    register(cur)
    trace = np.empty(iterations, dtype=np.int64)
    moves = 0
    for it in range(iterations):
        neigh = []
        for j in range(data.p):
            config = _toggle(cur.config, j)
            if config and len(config) <= hyper.s_max:
                sc = score_configuration(data, fam, config, hyper, cache, opts)
                register(sc)
                neigh.append(sc)
        logs = np.array([sc.log_unnorm_posterior for sc in neigh])
        if neigh and np.isfinite(logs).any():
            w = np.exp(logs - logsumexp(logs))
            cur = neigh[int(rng.choice(len(neigh), p=w / w.sum()))]
            moves += 1
        trace[it] = register(cur)
    return ChainResult(states=states, log_scores=np.array(scores), trace=trace,
                       acceptance_rate=moves / max(iterations, 1), initial_config=start,
                       hyper=hyper, p=data.p, cache=cache)


@dataclass
class SelectionReport:
    inclusion: np.ndarray
    selected: tuple
    threshold: float
    estimates: np.ndarray
    column_names: tuple
    prediction_draws: np.ndarray = None

    @classmethod
    def from_chain(cls, chain, column_names, threshold=None):
        t = chain.hyper.threshold if threshold is None else threshold
        incl = inclusion_probabilities(chain)
        return cls(inclusion=incl, selected=select(incl, t), threshold=t,
                   estimates=estimate_coefficients(chain), column_names=tuple(column_names))

    def to_dict(self):
        doc = {
            "threshold": self.threshold,
            "selected": list(self.selected),
            "selected_names": [self.column_names[j] for j in self.selected],
            "variables": [
                {"name": name, "inclusion": float(self.inclusion[j]),
                 "estimate": float(self.estimates[j]), "selected": j in self.selected}
                for j, name in enumerate(self.column_names)
            ],
        }
        if self.prediction_draws is not None:
            doc["prediction_draws"] = np.asarray(self.prediction_draws).tolist()
        return doc

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "inclusion", "estimate", f"selected@{self.threshold:g}"])
        chosen = set(self.selected)
        for j, name in enumerate(self.column_names):
            w.writerow([name, repr(float(self.inclusion[j])), repr(float(self.estimates[j])),
                        int(j in chosen)])
        return buf.getvalue()


def dump_trace(chain, fh):
    """Write each retained configuration as a space-separated index line."""
    for sid in chain.trace:
        fh.write(" ".join(map(str, chain.states[sid])) + "\n")
