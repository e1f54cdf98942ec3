"""Simulation studies: AR(1) Gaussian designs, sparse truths, selection and
estimation metrics, replication orchestration and report emission."""
import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import EbglmError, GlmRangeError
from .families import get_family
from .glm import Dataset
from .prior import Hyperparameters
from .sampler import estimate_coefficients, inclusion_probabilities, run_chain, select

METHODS = (("EB1", 0.1), ("EB2", 0.5))
POISSON_RATE_LIMIT = 40.0


@dataclass(frozen=True)
class SimSetting:
    n: int
    p: int
    s: int
    r: float = 0.0
    sigma: float = None  # 1 for logistic/probit, 0.3 for poisson
    family: str = "logistic"
    signal: float = 3.0
    replications: int = None  # 100 logistic, 50 poisson
    hyper: dict = field(default_factory=dict)  # per-setting Hyperparameters overrides

    def __post_init__(self):
        fam = get_family(self.family)
        if self.sigma is None:
            object.__setattr__(self, "sigma", 0.3 if fam.family_kind == "poisson" else 1.0)
        if self.replications is None:
            object.__setattr__(self, "replications",
                               50 if fam.family_kind == "poisson" else 100)
        if not 0 <= self.s <= self.p:
            raise ValueError(f"need 0 <= s <= p, got s={self.s}, p={self.p}")
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"r must lie in [0, 1), got {self.r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    @property
    def fam(self):
        return get_family(self.family)

    def theta_star(self):
        theta = np.zeros(self.p)
        theta[: self.s] = self.signal
        return theta

    def true_config(self):
        return tuple(range(self.s))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)


def load_settings(path):
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = [doc]
    return [SimSetting.from_dict(d) for d in doc]


def generate_design(setting, rng):
    """Rows i.i.d. N(0, sigma^2 R) with R_ij = r^|i-j|, via the AR(1) recursion."""
    n, p, r = setting.n, setting.p, setting.r
    Z = rng.standard_normal((n, p))
    X = np.empty((n, p))
    X[:, 0] = Z[:, 0]
    innov = math.sqrt(1.0 - r * r)
    for j in range(1, p):
        X[:, j] = r * X[:, j - 1] + innov * Z[:, j]
    return setting.sigma * X


def generate_response(fam, X, theta_star, rng):
    lin = np.asarray(X) @ np.asarray(theta_star, dtype=float)
    if fam.family_kind == "poisson" and lin.size and lin.max() > POISSON_RATE_LIMIT:
        raise GlmRangeError(
            f"poisson log-rate reaches {lin.max():.1f}; reduce the covariate scale sigma")
    return fam.sample(lin, rng)


@dataclass(frozen=True)
class Metrics:
    tpr: float
    tnr: float
    mcc: float
    mse: float = None


def _ratio(num, den):
    return num / den if den else 0.0


def confusion_metrics(selected, true_config, p):
    chosen = set(int(j) for j in selected)
    truth = set(int(j) for j in true_config)
    if any(not 0 <= j < p for j in chosen | truth):
        raise ValueError("indices outside [0, p)")
    tp = len(chosen & truth)
    fp = len(chosen - truth)
    fn = len(truth - chosen)
    tn = p - tp - fp - fn
    den = math.sqrt(float((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)))
    mcc = _ratio(tp * tn - fp * fn, den)
    return Metrics(tpr=_ratio(tp, tp + fn), tnr=_ratio(tn, tn + fp), mcc=mcc)


def mse(estimate, theta_star):
    diff = np.asarray(estimate, dtype=float) - np.asarray(theta_star, dtype=float)
    return float(diff @ diff)


def replication_rng(seed, rep):
    """Independent stream for replication ``rep``, reproducible in isolation."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def resolve_hyper(setting, hyper):
    base = hyper if hyper is not None else Hyperparameters()
    if setting.hyper:
        base = replace(base, **setting.hyper)
    return base.resolve(setting.n, setting.p)


def run_replication(setting, hyper, seed, rep, thresholds=METHODS):
    """One replication: simulate, run the chain, select, estimate, score."""
    rng = replication_rng(seed, rep)
    fam = setting.fam
    h = resolve_hyper(setting, hyper)
    record = {"replication": rep}
    try:
        X = generate_design(setting, rng)
        theta = setting.theta_star()
        data = Dataset(X, generate_response(fam, X, theta, rng))
        chain = run_chain(data, fam, h, rng)
    except EbglmError as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
        return record
    incl = inclusion_probabilities(chain)
    err = mse(estimate_coefficients(chain), theta)
    record.update(acceptance_rate=chain.acceptance_rate, states=len(chain.states), mse=err)
    for name, t in thresholds:
        chosen = select(incl, t)
        m = confusion_metrics(chosen, setting.true_config(), setting.p)
        record[name] = {"threshold": t, "selected": list(chosen),
                        "TPR": m.tpr, "TNR": m.tnr, "MCC": m.mcc}
    return record


def _task(args):
    return run_replication(*args)


@dataclass
class StudyReport:
    seed: int
    settings: list
    hypers: list
    replications: list  # per setting, list of records
    methods: tuple = METHODS

    CSV_COLUMNS = ("n", "p", "s", "r", "family", "method", "TPR", "TNR", "MCC", "MSE",
                   "replications", "seed")

    def rows(self):
        out = []
        for setting, records in zip(self.settings, self.replications):
            good = [rec for rec in records if "error" not in rec]
            for name, _ in self.methods:
                row = {"n": setting.n, "p": setting.p, "s": setting.s, "r": setting.r,
                       "family": setting.family, "method": name,
                       "replications": len(good), "seed": self.seed}
                for key in ("TPR", "TNR", "MCC"):
                    row[key] = float(np.mean([rec[name][key] for rec in good])) if good else math.nan
                row["MSE"] = float(np.mean([rec["mse"] for rec in good])) if good else math.nan
                out.append(row)
        return out

    def failures(self):
        return [sum("error" in rec for rec in records) for records in self.replications]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (f"{v:.6f}" if isinstance(v, float) and k not in ("r",) else v)
                        for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self):
        return {
            "seed": self.seed,
            "summary": self.rows(),
            "settings": [
                {"setting": s.to_dict(), "hyper": h.to_dict(), "failures": f,
                 "replications": recs}
                for s, h, f, recs in zip(self.settings, self.hypers, self.failures(),
                                         self.replications)
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self):
        """Plain-text summary: one block per setting, EB1/EB2 side by side."""
        lines = ["   n    p   s    r  family    metric     EB1     EB2"]
        rows = self.rows()
        for i in range(0, len(rows), len(self.methods)):
            group = {row["method"]: row for row in rows[i:i + len(self.methods)]}
            first = rows[i]
            for metric in ("TPR", "TNR", "MCC", "MSE"):
                vals = "  ".join(f"{group[m][metric]:6.3f}" for m, _ in self.methods)
                lines.append(f"{first['n']:4d} {first['p']:4d} {first['s']:3d} {first['r']:4.1f}"
                             f"  {first['family']:<8s}  {metric:<6s}  {vals}")
        return "\n".join(lines)


def run_study(settings, hyper=None, seed=0, workers=1, progress=None):
    """Run every replication of every setting and aggregate per setting.

    Replications run in a process pool when ``workers > 1``; results are
    collected in task order so the report does not depend on scheduling.
    """
    settings = list(settings)
    tasks = [(s, hyper, seed, rep) for s in settings for rep in range(s.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=1))
    else:
        results = []
        for task in tasks:
            results.append(_task(task))
            if progress is not None:
                progress(len(results), len(tasks))
    grouped, i = [], 0
    for s in settings:
        grouped.append(results[i:i + s.replications])
        i += s.replications
    return StudyReport(seed=seed, settings=settings,
                       hypers=[resolve_hyper(s, hyper) for s in settings],
                       replications=grouped)
