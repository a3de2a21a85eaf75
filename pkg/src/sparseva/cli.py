"""Command-line front end: ``sparseva {estimate,bound,curvature,experiment,synth}``.

Exit codes: 0 success, 2 usage or input error, 3 numerical/rank error,
4 convergence failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .bounds import SparseBoundInputs, sparse_bound
from .core import (
    ConvergenceError,
    InvalidConfigError,
    RankError,
    SparsevaConfig,
    SparsevaError,
    UndefinedMultiplierError,
    resolve_epsilon,
)
from .curvature import DEFAULT_TRIALS, CurvatureCache, estimate_kappa_alpha
from .dataio import DataFormatError, read_data_csv, write_regression_csv, write_signal_csv
from .experiment import ExperimentConfig, aggregate, run_experiment, write_outputs
from .solver import solve_sparseva
from .sysid import SignalSpec, fir_regression, fir_truth, random_stable_system, sigma_for, simulate

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CONVERGENCE = 0, 2, 3, 4


class UsageError(InvalidConfigError):
    pass


def _default_cache() -> Path:
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "sparseva" / "curvature.csv"


def _emit(payload: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(payload, indent=2) + "\n")
        return
    for key, value in payload.items():
        if isinstance(value, (list, tuple)):
            value = " ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        out.write(f"{key},{value}\n")


def _json_float(x: float):
    return x if math.isfinite(x) else str(x)


# -- estimate ---------------------------------------------------------------

def cmd_estimate(args) -> int:
    data = read_data_csv(args.data)
    if data.kind == "regression":
        problem = data.regression()
        if args.fir_order is not None and args.fir_order != problem.n:
            raise UsageError(f"--fir-order {args.fir_order} disagrees with {problem.n} regressor columns")
    else:
        if args.fir_order is None:
            raise UsageError("--fir-order is required for u,y data")
        n = args.fir_order
        warmup = args.warmup if args.warmup is not None else n + 50
        problem = fir_regression(data.u, data.y, n, warmup, args.stride)
    config = SparsevaConfig(args.eps_rule, solver_tol=args.tol, max_iter=args.max_iter)
    sol = solve_sparseva(problem, config)
    payload = {
        "n": problem.n,
        "N": problem.N,
        "eps_rule": config.label,
        "eps": sol.eps,
        "theta_hat": [float(v) for v in sol.theta_hat],
        "loss": sol.loss_at_solution,
        "loss_nr": sol.loss_nr,
        "lambda_eps": _json_float(sol.lambda_eps),
        "support": [int(i) + 1 for i in sol.support],
        "constraint_active": sol.constraint_active,
        "iterations": sol.iterations,
    }
    _emit(payload, args.format)
    return EXIT_OK


# -- bound ------------------------------------------------------------------

def cmd_bound(args) -> int:
    if args.eps is not None:
        eps = args.eps
    else:
        eps = resolve_epsilon(SparsevaConfig(args.eps_rule), args.n, args.N)
    res = sparse_bound(SparseBoundInputs(
        n=args.n, n_eta=args.n_eta, N=args.N, sigma_e2=args.sigma_e2, s_max=args.s_max,
        kappa_alpha=args.kappa_alpha, eps_N=eps, beta=args.beta, alpha=args.alpha, theta_tail_l1=args.tail))
    _emit({"a1": res.a1, "a2": res.a2, "bound": res.bound, "bound_l2": res.bound_l2, "prob": res.prob,
           "vacuous": res.vacuous, "eps": eps}, args.format)
    return EXIT_OK


# -- curvature --------------------------------------------------------------

def _load_sigma(spec: str, n: int) -> np.ndarray:
    if spec.lower() in ("white", "ar1"):
        return sigma_for(spec, n)
    try:
        sigma = np.loadtxt(spec, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read covariance matrix from {spec!r}: {exc}") from None
    if sigma.shape != (n, n):
        raise UsageError(f"covariance file is {sigma.shape[0]}x{sigma.shape[1]}, expected {n}x{n}")
    return sigma


def cmd_curvature(args) -> int:
    sigma = _load_sigma(args.sigma, args.n)
    if args.no_cache:
        est = estimate_kappa_alpha(sigma, args.n, args.N, args.alpha, args.trials, args.seed, jobs=args.jobs)
    else:
        cache = CurvatureCache(args.cache or _default_cache())
        est = cache.get_or_estimate(sigma, args.n, args.N, args.alpha, args.trials, args.seed, jobs=args.jobs)
    _emit({"w_min": est.w_min, "kappa_alpha": est.kappa_alpha, "alpha": est.alpha, "trials": est.trials,
           "n": est.n, "N": est.N, "seed": est.seed, "sigma_digest": est.sigma_digest}, args.format)
    return EXIT_OK


# -- experiment -------------------------------------------------------------

_LIST_KEYS = {"input_kinds", "snr_db_list", "N_list", "eps_rules", "n_eta_list"}
_INT_KEYS = {"n", "realizations", "curvature_trials", "root_seed"}
_FLOAT_KEYS = {"alpha", "beta", "q"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse the flat ``key = value`` config format.

    ``#`` starts a comment, blank lines are ignored, list values are comma
    separated.  Keys are the :class:`ExperimentConfig` field names.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in known:
            raise UsageError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise UsageError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            out[key] = _convert(key, value)
        except ValueError:
            raise UsageError(f"{source}:{lineno}: bad value {value!r} for {key}") from None
    return out


def _convert(key: str, value: str):
    if key in _LIST_KEYS:
        items = [v.strip() for v in value.split(",") if v.strip()]
        if key in ("snr_db_list",):
            return tuple(float(v) for v in items)
        if key in ("N_list", "n_eta_list"):
            return tuple(int(v) for v in items)
        return tuple(items)
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    return value


def build_experiment_config(args) -> ExperimentConfig:
    values = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
        values.update(parse_config_text(text, args.config))
    overrides = {
        "input_kinds": args.input_kinds, "snr_db_list": args.snr_db, "N_list": args.N_list,
        "eps_rules": args.eps_rules, "n": args.n, "n_eta_list": args.n_eta, "alpha": args.alpha,
        "beta": args.beta, "realizations": args.realizations, "curvature_trials": args.trials,
        "root_seed": args.seed,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = _convert(key, value) if isinstance(value, str) else value
    return ExperimentConfig(**values)


def cmd_experiment(args) -> int:
    config = build_experiment_config(args)
    if args.dry_run:
        for cell in config.cells():
            for rule in config.eps_rules:
                print(f"{cell.input_kind.value},{cell.snr_db:g},{cell.N},{rule}")
        return EXIT_OK
    if args.out is None:
        raise UsageError("--out is required unless --dry-run is given")
    cache = None if args.no_cache else CurvatureCache(args.cache or _default_cache())
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    records, _ = run_experiment(config, jobs=args.jobs, cache=cache, progress=log)
    summary = aggregate(records)
    for path in write_outputs(records, summary, args.out, figures=not args.no_figures):
        print(path)
    worst = min(r["coverage"] for r in summary)
    print(f"minimum coverage {worst:.4f} (nominal {summary[0]['prob']:.4f})", file=sys.stderr)
    return EXIT_OK


# -- synth ------------------------------------------------------------------

def cmd_synth(args) -> int:
    system = random_stable_system(args.system_seed)
    spec = SignalSpec(args.input_kind, args.N, args.snr_db, args.seed)
    theta = fir_truth(system, args.n)
    sig = simulate(theta, spec, args.n)
    if args.format == "regression":
        write_regression_csv(args.out, fir_regression(sig.u, sig.y, args.n, sig.warmup, sig.stride))
    else:
        write_signal_csv(args.out, sig.u, sig.y)
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            fh.write("theta_star\n")
            fh.writelines(f"{float(v)!r}\n" for v in theta)
    print(json.dumps({"sigma_e2": sig.sigma_e2, "warmup": sig.warmup, "stride": sig.stride,
                      "order": system.order, "rows": spec.N}), file=sys.stderr)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparseva", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="SPARSEVA estimate from a CSV file")
    e.add_argument("data", help="CSV with header 'u,y' or 'y,phi_1,...,phi_n'")
    e.add_argument("--fir-order", type=_positive_int, help="FIR order n (required for u,y data)")
    e.add_argument("--eps-rule", default="PEC", help="PEC, AIC, BIC or explicit:<value> (default PEC)")
    e.add_argument("--tol", type=float, default=1e-8)
    e.add_argument("--max-iter", type=_positive_int, default=10_000)
    e.add_argument("--warmup", type=int, help="first regression time index for u,y data (default n+50)")
    e.add_argument("--stride", type=_positive_int, default=1, help="spacing of regression times for u,y data")
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bound", help="evaluate the sparse-regression error bound")
    b.add_argument("--n", type=_positive_int, required=True)
    b.add_argument("--n-eta", type=_positive_int, required=True)
    b.add_argument("--N", type=_positive_int, required=True)
    b.add_argument("--sigma-e2", type=float, required=True)
    b.add_argument("--s-max", type=float, default=1.0)
    b.add_argument("--kappa-alpha", type=float, required=True)
    g = b.add_mutually_exclusive_group()
    g.add_argument("--eps", type=float, help="explicit slack eps_N")
    g.add_argument("--eps-rule", default="PEC")
    b.add_argument("--beta", type=float, default=0.001)
    b.add_argument("--alpha", type=float, default=0.02)
    b.add_argument("--tail", type=float, default=0.0, help="l1 norm of the n - n_eta smallest true coefficients")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.set_defaults(func=cmd_bound)

    c = sub.add_parser("curvature", help="empirical curvature bound kappa_alpha")
    c.add_argument("--sigma", default="white", help="'white', 'ar1', or a CSV file holding an n x n matrix")
    c.add_argument("--n", type=_positive_int, required=True)
    c.add_argument("--N", type=_positive_int, required=True)
    c.add_argument("--alpha", type=float, default=0.02)
    c.add_argument("--trials", type=_positive_int, default=DEFAULT_TRIALS)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--jobs", type=_positive_int, default=1)
    c.add_argument("--cache", help="curvature cache CSV (default under $XDG_CACHE_HOME/sparseva)")
    c.add_argument("--no-cache", action="store_true")
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.set_defaults(func=cmd_curvature)

    x = sub.add_parser("experiment", help="run the Monte Carlo bound-vs-error study")
    x.add_argument("--config", help="key = value config file; flags override it")
    x.add_argument("--out", help="output directory")
    x.add_argument("--jobs", type=_positive_int, default=1)
    x.add_argument("--dry-run", action="store_true", help="print the cell grid and exit")
    x.add_argument("--no-figures", action="store_true")
    x.add_argument("--cache")
    x.add_argument("--no-cache", action="store_true")
    x.add_argument("--verbose", action="store_true")
    x.add_argument("--input-kinds")
    x.add_argument("--snr-db")
    x.add_argument("--N-list")
    x.add_argument("--eps-rules")
    x.add_argument("--n", type=_positive_int)
    x.add_argument("--n-eta")
    x.add_argument("--alpha", type=float)
    x.add_argument("--beta", type=float)
    x.add_argument("--realizations", type=_positive_int)
    x.add_argument("--trials", type=_positive_int)
    x.add_argument("--seed", type=int)
    x.set_defaults(func=cmd_experiment)

    s = sub.add_parser("synth", help="generate one synthetic data set")
    s.add_argument("--input-kind", default="white", choices=("white", "ar1"))
    s.add_argument("--N", type=_positive_int, required=True, help="number of regression rows")
    s.add_argument("--snr-db", type=float, default=30.0)
    s.add_argument("--n", type=_positive_int, default=35)
    s.add_argument("--seed", type=int, default=0, help="data seed")
    s.add_argument("--system-seed", type=int, default=0)
    s.add_argument("--format", choices=("signal", "regression"), default="signal")
    s.add_argument("--out", required=True)
    s.add_argument("--truth", help="also write theta_star to this CSV")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RankError, UndefinedMultiplierError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (InvalidConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SparsevaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
