"""Compare the numba and pure-numpy kernel backends.

Each backend runs in its own interpreter (the choice is made at import time
from ``EBGLM_DISABLE_NUMBA``).  Reported times exclude numba compilation,
which is triggered by a warm-up call.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, time
import numpy as np
import ebglm
from ebglm import LOGISTIC, POISSON, Dataset, Hyperparameters, fit_mle, run_chain

def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)

repeat = {repeat}
rng = np.random.default_rng(0)
X = rng.standard_normal((200, 40))
theta = np.zeros(40)
theta[:3] = [1.0, -1.0, 0.8]
logit = Dataset(X, LOGISTIC.sample(X @ theta, rng))
pois = Dataset(0.3 * X, POISSON.sample(0.3 * X @ theta, rng))
configs = [tuple(sorted(rng.choice(40, size=k, replace=False))) for k in (1, 2, 3, 4, 6) * 40]

def fits(data, fam):
    for c in configs:
        fit_mle(data, fam, c)

hyper = Hyperparameters(samples=4000).resolve(200, 40)
chain = lambda: run_chain(logit, LOGISTIC, hyper, np.random.default_rng(1))
fits(logit, LOGISTIC); fits(pois, POISSON); chain()  # warm-up / compile
res = {{
    "backend": ebglm.BACKEND,
    "fit_logistic_us": 1e6 * best_of(lambda: fits(logit, LOGISTIC), repeat) / len(configs),
    "fit_poisson_us": 1e6 * best_of(lambda: fits(pois, POISSON), repeat) / len(configs),
    "chain_5000_steps_s": best_of(chain, repeat),
}}
print(json.dumps(res))
"""


def run_backend(disable, repeat):
    env = dict(os.environ, EBGLM_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WORKER.format(repeat=repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    rows = [run_backend(False, args.repeat), run_backend(True, args.repeat)]
    keys = ("fit_logistic_us", "fit_poisson_us", "chain_5000_steps_s")
    print(f"{'backend':<8s} " + " ".join(f"{k:>20s}" for k in keys))
    for r in rows:
        print(f"{r['backend']:<8s} " + " ".join(f"{r[k]:20.3f}" for k in keys))
    if rows[0]["backend"] == "numba":
        print("speed-up " + " ".join(f"{rows[1][k] / rows[0][k]:19.1f}x" for k in keys))


if __name__ == "__main__":
    main()
