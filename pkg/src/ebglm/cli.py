"""Command-line entry point: ``ebglm {select,enumerate,diagnose,simulate}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import __version__
from ._accel import BACKEND
from .diagnostics import theory_report
from .errors import DataError, EbglmError, UnsupportedError
from .families import get_family
from .glm import DEFAULT_SOLVER, Dataset, first_invalid_response
from .posterior import enumerate_posterior
from .prior import Hyperparameters
from .sampler import SelectionReport, dump_trace, predict, run_chain
from .simulation import load_settings, run_study

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    command: str
    argv: list
    hyper: dict
    dataset_sha256: str
    version: str
    backend: str
    seed: int
    solver: dict
    wall_time: float = 0.0


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _parse_float(cell, row, col):
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"row {row}, column {col!r}: non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise DataError(f"row {row}, column {col!r}: non-finite value {cell!r}")
    return value


def read_matrix_csv(path):
    """Header row plus numeric body; returns (names, array)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise DataError(f"{path}: header must have unique, nonempty names")
    body = []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise DataError(f"{path}: row {i} has {len(r)} fields, header has {len(header)}")
        body.append([_parse_float(cell.strip(), i, header[j]) for j, cell in enumerate(r)])
    if not body:
        raise DataError(f"{path}: no data rows")
    return header, np.array(body)


def read_dataset(path, response, fam):
    header, M = read_matrix_csv(path)
    if response not in header:
        raise DataError(f"{path}: response column {response!r} not in header")
    j = header.index(response)
    names = [h for h in header if h != response]
    if not names:
        raise DataError(f"{path}: no predictor columns")
    X = np.delete(M, j, axis=1)
    i = first_invalid_response(fam, M[:, j])
    if i is not None:
        # observation i sits on file row i + 2 (row 1 is the header)
        raise DataError(f"{path}: row {i + 2}, column {response!r}: value {float(M[i, j])!r} "
                        f"outside the {fam.name} support")
    return Dataset(X, M[:, j], names)


def read_truth(path, names):
    """theta* as a ``name,value`` CSV or one value per line in column order."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    first = [c.strip() for c in lines[0].split(",")] if lines else []
    if first[:2] == ["name", "value"]:
        mapping = {}
        for i, ln in enumerate(lines[1:], start=2):
            parts = [c.strip() for c in ln.split(",")]
            if len(parts) != 2:
                raise DataError(f"{path}: row {i} must be name,value")
            mapping[parts[0]] = _parse_float(parts[1], i, "value")
        unknown = set(mapping) - set(names)
        if unknown:
            raise DataError(f"{path}: unknown predictors {sorted(unknown)}")
        return np.array([mapping.get(n, 0.0) for n in names])
    values = [_parse_float(ln, i, "value") for i, ln in enumerate(lines, start=1)]
    if len(values) != len(names):
        raise DataError(f"{path}: {len(values)} values for {len(names)} predictors")
    return np.array(values)


def _add_hyper_flags(p):
    p.add_argument("--config", help="JSON file with hyperparameter defaults")
    p.add_argument("--alpha", type=float, help="likelihood power in (0, 1) [0.999]")
    p.add_argument("--beta", type=float,
                   help="complexity exponent [1.01 + 0.5 log n / log p]")
    p.add_argument("--gamma", type=float, help="prior covariance inflation [1]")
    p.add_argument("--smax", type=int, help="largest configuration size [floor(min(n/2, p))]")
    p.add_argument("--samples", type=int, help="retained chain samples M [10000]")
    p.add_argument("--burnin", type=float, help="burn-in fraction [0.2]")
    p.add_argument("--threshold", type=float, help="inclusion threshold t [0.5]")
    p.add_argument("--seed", type=int, help="random seed [EBGLM_SEED or 0]")
    p.add_argument("--out", required=True, help="output directory")


def _add_data_flags(p):
    p.add_argument("data", help="CSV file with header row")
    p.add_argument("--response", required=True, help="name of the response column")
    p.add_argument("--family", default="logistic", choices=["logistic", "poisson", "probit"])


def build_parser():
    parser = _Parser(prog="ebglm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ebglm {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("select", help="run the chain and report inclusion probabilities")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--predict", help="CSV of new predictor rows (same header minus response)")
    p.add_argument("--trace", action="store_true", help="also write chain trace lines")

    p = sub.add_parser("enumerate", help="exact configuration posterior for small p")
    _add_data_flags(p)
    _add_hyper_flags(p)

    p = sub.add_parser("diagnose", help="theory diagnostics against a known truth")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--truth", required=True, help="theta* file (name,value CSV or one per line)")
    p.add_argument("--c", type=float, default=2.0, help="beta-min constant c > 1 [2]")

    p = sub.add_parser("simulate", help="replicated simulation study from a settings file")
    p.add_argument("--settings", required=True, help="JSON array of simulation settings")
    p.add_argument("--reps", type=int, help="override replications of every setting")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker processes [logical cores]")
    p.add_argument("--family", choices=["logistic", "poisson", "probit"],
                   help="override the family of every setting")
    _add_hyper_flags(p)
    return parser


def _hyper(args):
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from None
    flags = {"alpha": args.alpha, "beta": args.beta, "gamma": args.gamma,
             "s_max": args.smax, "samples": args.samples, "burnin": args.burnin,
             "threshold": args.threshold}
    base.update({k: v for k, v in flags.items() if v is not None})
    if args.seed is not None:
        base["seed"] = args.seed
    elif "seed" not in base and os.environ.get("EBGLM_SEED"):
        try:
            base["seed"] = int(os.environ["EBGLM_SEED"])
        except ValueError:
            raise UsageError("EBGLM_SEED must be an integer") from None
    try:
        return Hyperparameters.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid hyperparameters: {exc}") from None


def _write(out, name, text):
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _resolve(hyper, data):
    try:
        return hyper.resolve(data.n, data.p)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_select(args, hyper):
    fam = get_family(args.family)
    data = read_dataset(args.data, args.response, fam)
    hyper = _resolve(hyper, data)
    rng = np.random.default_rng(hyper.seed)
    chain = run_chain(data, fam, hyper, rng)
    report = SelectionReport.from_chain(chain, data.column_names)
    if args.predict:
        header, new_X = read_matrix_csv(args.predict)
        if list(header) != list(data.column_names):
            raise DataError(f"{args.predict}: header must match the predictor columns")
        report.prediction_draws = predict(chain, None, fam, new_X, hyper, rng)
    doc = report.to_dict()
    doc["acceptance_rate"] = chain.acceptance_rate
    doc["initial_config"] = list(chain.initial_config)
    _write(args.out, "report.json", json.dumps(doc, indent=2))
    _write(args.out, "report.csv", report.to_csv())
    if args.trace:
        with open(os.path.join(args.out, "trace.txt"), "w") as fh:
            dump_trace(chain, fh)
    return hyper, args.data


def _cmd_enumerate(args, hyper):
    fam = get_family(args.family)
    data = read_dataset(args.data, args.response, fam)
    if data.p > 15:
        raise UnsupportedError(f"enumerate supports p <= 15 predictors, got p={data.p}")
    if hyper.s_max is None:
        hyper = replace(hyper, s_max=min(4, data.p, data.n - 1))
    hyper = _resolve(hyper, data)
    post = enumerate_posterior(data, fam, hyper)
    doc = post.to_json(data.column_names)
    doc["inclusion"] = dict(zip(data.column_names, post.inclusion().tolist()))
    _write(args.out, "report.json", json.dumps(doc, indent=2))
    lines = ["indices,names,probability"]
    for c, prob in sorted(post.entries, key=lambda e: (-e[1], len(e[0]), e[0])):
        lines.append(f"{' '.join(map(str, c))},{' '.join(data.column_names[j] for j in c)},"
                     f"{prob!r}")
    _write(args.out, "report.csv", "\n".join(lines) + "\n")
    return hyper, args.data


def _cmd_diagnose(args, hyper):
    fam = get_family(args.family)
    data = read_dataset(args.data, args.response, fam)
    theta_star = read_truth(args.truth, data.column_names)
    hyper = _resolve(hyper, data)
    rng = np.random.default_rng(hyper.seed)
    chain = run_chain(data, fam, hyper, rng)
    report = theory_report(data, fam, theta_star, chain, hyper, rng, c=args.c)
    doc = report.to_dict()
    _write(args.out, "report.json", json.dumps(doc, indent=2))
    lines = ["field,value"] + [f"{k},{v}" for k, v in doc.items() if k != "notes"]
    _write(args.out, "report.csv", "\n".join(lines) + "\n")
    return hyper, args.data


def _cmd_simulate(args, hyper):
    try:
        settings = load_settings(args.settings)
    except OSError as exc:
        raise DataError(f"cannot read settings {args.settings}: {exc}") from None
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise DataError(f"invalid settings file {args.settings}: {exc}") from None
    if args.reps is not None:
        settings = [replace(s, replications=args.reps) for s in settings]
    if args.family is not None:
        settings = [replace(s, family=args.family, sigma=None if s.sigma is None else s.sigma)
                    for s in settings]
    report = run_study(settings, hyper, seed=hyper.seed, workers=max(1, args.threads))
    _write(args.out, "report.csv", report.to_csv())
    _write(args.out, "report.json", report.to_json())
    print(report.table())
    return hyper, args.settings


COMMANDS = {"select": _cmd_select, "enumerate": _cmd_enumerate,
            "diagnose": _cmd_diagnose, "simulate": _cmd_simulate}


def run(argv):
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        hyper = _hyper(args)
        os.makedirs(args.out, exist_ok=True)
        hyper, source = COMMANDS[args.command](args, hyper)
        manifest = RunManifest(
            command=args.command, argv=list(argv), hyper=hyper.to_dict(),
            dataset_sha256=_sha256(source), version=__version__, backend=BACKEND,
            seed=hyper.seed, solver=DEFAULT_SOLVER.as_dict(),
            wall_time=round(time.perf_counter() - start, 3))
        _write(args.out, "manifest.json", json.dumps(asdict(manifest), indent=2))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, UnsupportedError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EbglmError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
