"""Monte Carlo study of the error bound against realized SPARSEVA errors.

A study sweeps input kind x SNR x N x eps rule.  Within one
(input kind, SNR, N) triple every eps rule sees the same data realizations.
One record is produced per (cell, realization, n_eta).
"""
from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .bounds import SparseBoundInputs, sparse_bound, weak_sparsity_tail
from .core import InvalidConfigError, SparsevaConfig, SparsevaError, resolve_epsilon
from .curvature import DEFAULT_TRIALS, CurvatureCache, CurvatureEstimate, estimate_kappa_alpha
from .dataio import write_records_csv
from .solver import solve_sparseva
from .stats import derive_seed
from .sysid import InputKind, SignalSpec, random_stable_system, s_max, sigma_for, synthesize

_STREAM_SYSTEM, _STREAM_DATA, _STREAM_CURVATURE = 0, 1, 2
_KIND_CODE = {InputKind.WHITE: 0, InputKind.AR1: 1}


@dataclass(frozen=True)
class ExperimentConfig:
    input_kinds: tuple = ("white", "ar1")
    snr_db_list: tuple = (30.0, 20.0, 10.0)
    N_list: tuple = (450, 1000, 5000)
    eps_rules: tuple = ("PEC",)
    n: int = 35
    n_eta_list: tuple = (10, 15, 25)
    alpha: float = 0.02
    beta: float = 0.001
    realizations: int = 50
    curvature_trials: int = DEFAULT_TRIALS
    root_seed: int = 0
    q: float = 0.5

    def __post_init__(self):
        conv = {
            "input_kinds": lambda v: tuple(InputKind.parse(k) for k in v),
            "snr_db_list": lambda v: tuple(float(x) for x in v),
            "N_list": lambda v: tuple(int(x) for x in v),
            "eps_rules": lambda v: tuple(SparsevaConfig(r).label for r in v),
            "n_eta_list": lambda v: tuple(int(x) for x in v),
        }
        for name, fn in conv.items():
            value = getattr(self, name)
            if isinstance(value, (str, int, float)):
                value = (value,)
            value = fn(value)
            if not value:
                raise InvalidConfigError(f"{name} must not be empty")
            object.__setattr__(self, name, value)
        if self.n < 1:
            raise InvalidConfigError("n must be positive")
        bad = [k for k in self.n_eta_list if not 1 <= k <= self.n]
        if bad:
            raise InvalidConfigError(f"n_eta values {bad} outside [1, n={self.n}]")
        small = [N for N in self.N_list if N <= self.n]
        if small:
            raise InvalidConfigError(f"N values {small} must exceed n={self.n}")
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise InvalidConfigError("alpha and beta must lie in (0, 1)")
        if self.realizations < 1:
            raise InvalidConfigError("realizations must be positive")

    def cells(self) -> list:
        """All (input_kind, snr_db, N) triples in sweep order."""
        return [Cell(k, s, N) for k in self.input_kinds for s in self.snr_db_list for N in self.N_list]


@dataclass(frozen=True)
class Cell:
    input_kind: InputKind
    snr_db: float
    N: int


def _snr_key(snr_db: float) -> int:
    if math.isinf(snr_db):
        return 2**32 - 1
    return int(round(snr_db * 1000)) % (2**32 - 1)


def system_seed(config: ExperimentConfig) -> int:
    return derive_seed(config.root_seed, _STREAM_SYSTEM)


def data_seed(config: ExperimentConfig, cell: Cell, realization: int) -> int:
    return derive_seed(config.root_seed, _STREAM_DATA, _KIND_CODE[cell.input_kind], _snr_key(cell.snr_db),
                       cell.N, realization)


def curvature_seed(config: ExperimentConfig, kind: InputKind, N: int) -> int:
    return derive_seed(config.root_seed, _STREAM_CURVATURE, _KIND_CODE[kind], N)


RECORD_COLUMNS = [
    "input_kind", "snr_db", "N", "eps_rule", "realization", "n_eta", "n", "alpha", "beta", "seed",
    "eps_N", "sigma_e2", "s_max", "kappa_alpha", "tail_l1", "lambda_eps", "a1", "a2", "bound", "bound_l2",
    "error_l2", "prob", "covered", "status",
]


@dataclass(frozen=True)
class ExperimentRecord:
    input_kind: str
    snr_db: float
    N: int
    eps_rule: str
    realization: int
    n_eta: int
    n: int
    alpha: float
    beta: float
    seed: int
    eps_N: float
    sigma_e2: float
    s_max: float
    kappa_alpha: float
    tail_l1: float
    lambda_eps: float
    a1: float
    a2: float
    bound: float
    bound_l2: float
    error_l2: float
    prob: float
    covered: bool
    status: str = "ok"

    def sort_key(self):
        return (self.input_kind, -self.snr_db, self.eps_rule, self.N, self.realization, self.n_eta)

    def bound_inputs(self) -> SparseBoundInputs:
        return SparseBoundInputs(n=self.n, n_eta=self.n_eta, N=self.N, sigma_e2=self.sigma_e2, s_max=self.s_max,
                                 kappa_alpha=self.kappa_alpha, eps_N=self.eps_N, beta=self.beta, alpha=self.alpha,
                                 theta_tail_l1=self.tail_l1)


def curvature_for(config: ExperimentConfig, kind: InputKind, N: int, cache: Optional[CurvatureCache] = None,
                  jobs: int = 1) -> CurvatureEstimate:
    sigma = sigma_for(kind, config.n)
    seed = curvature_seed(config, kind, N)
    if cache is not None:
        return cache.get_or_estimate(sigma, config.n, N, config.alpha, config.curvature_trials, seed, jobs=jobs)
    return estimate_kappa_alpha(sigma, config.n, N, config.alpha, config.curvature_trials, seed, jobs=jobs)


def run_cell(config: ExperimentConfig, cell: Cell, kappa_alpha: float, eps_rules=None) -> list:
    """Records for every realization, eps rule and n_eta of one cell."""
    n = config.n
    rules = config.eps_rules if eps_rules is None else eps_rules
    system = random_stable_system(system_seed(config))
    smax = s_max(sigma_for(cell.input_kind, n))
    out = []
    for r in range(config.realizations):
        seed = data_seed(config, cell, r)
        spec = SignalSpec(cell.input_kind, cell.N, cell.snr_db, seed)
        problem, truth = synthesize(system, spec, n, q=config.q)
        tails = {k: weak_sparsity_tail(truth.theta_star, k) for k in config.n_eta_list}
        for rule in rules:
            sp_config = SparsevaConfig(rule)
            eps = resolve_epsilon(sp_config, n, cell.N)
            base = dict(input_kind=cell.input_kind.value, snr_db=cell.snr_db, N=cell.N, eps_rule=rule,
                        realization=r, n=n, alpha=config.alpha, beta=config.beta, seed=seed, eps_N=eps,
                        sigma_e2=truth.sigma_e2, s_max=smax, kappa_alpha=kappa_alpha)
            try:
                sol = solve_sparseva(problem, sp_config)
            except SparsevaError as exc:
                out += _failed(base, tails, float("nan"), f"solver_error:{type(exc).__name__}")
                continue
            error = float(np.linalg.norm(sol.theta_hat - truth.theta_star))
            if sol.is_zero(sp_config.solver_tol):
                out += _failed(base, tails, error, "zero_estimate")
                continue
            for k in config.n_eta_list:
                res = sparse_bound(SparseBoundInputs(
                    n=n, n_eta=k, N=cell.N, sigma_e2=truth.sigma_e2, s_max=smax, kappa_alpha=kappa_alpha,
                    eps_N=eps, beta=config.beta, alpha=config.alpha, theta_tail_l1=tails[k]))
                out.append(ExperimentRecord(
                    **base, n_eta=k, tail_l1=tails[k], lambda_eps=sol.lambda_eps, a1=res.a1, a2=res.a2,
                    bound=res.bound, bound_l2=res.bound_l2, error_l2=error, prob=res.prob,
                    covered=bool(error <= res.bound_l2), status="ok"))
    return out


def _failed(base, tails, error, status):
    nan = float("nan")
    return [ExperimentRecord(**base, n_eta=k, tail_l1=t, lambda_eps=nan, a1=nan, a2=nan, bound=nan, bound_l2=nan,
                             error_l2=error, prob=nan, covered=False, status=status) for k, t in tails.items()]


def _cell_job(args):
    config, cell, kappa = args
    return run_cell(config, cell, kappa)


def run_experiment(config: ExperimentConfig, jobs: int = 1, cache: Optional[CurvatureCache] = None,
                   progress=None) -> tuple:
    """Run every cell; return ``(records, curvature estimates)``.

    Records are sorted by cell coordinates, so the output is the same for
    any ``jobs``.
    """
    kappas = {}
    for kind in config.input_kinds:
        for N in config.N_list:
            kappas[(kind, N)] = curvature_for(config, kind, N, cache=cache, jobs=jobs)
            if progress:
                progress(f"curvature {kind.value} N={N}: kappa_alpha={kappas[(kind, N)].kappa_alpha:.6g}")
    tasks = [(config, cell, kappas[(cell.input_kind, cell.N)].kappa_alpha) for cell in config.cells()]
    records = []
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for cell_records in pool.map(_cell_job, tasks):
                records += cell_records
    else:
        for task in tasks:
            records += _cell_job(task)
            if progress:
                c = task[1]
                progress(f"cell {c.input_kind.value} snr={c.snr_db:g} N={c.N} done")
    records.sort(key=ExperimentRecord.sort_key)
    return records, kappas


SUMMARY_COLUMNS = [
    "input_kind", "snr_db", "eps_rule", "n_eta", "N", "count", "ok", "error_l2_median", "error_l2_min",
    "error_l2_max", "bound_l2_median", "error_sq_median", "bound_sq_median", "coverage", "prob",
    "bound_sq_slope", "error_sq_slope",
]


def loglog_slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    if x.size < 2 or not np.all(np.isfinite(y)):
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def aggregate(records) -> list:
    """Per-(input, SNR, rule, n_eta, N) summary rows plus log-log slopes over N."""
    groups = defaultdict(list)
    for rec in records:
        groups[(rec.input_kind, rec.snr_db, rec.eps_rule, rec.n_eta, rec.N)].append(rec)
    rows = []
    for key in sorted(groups, key=lambda k: (k[0], -k[1], k[2], k[3], k[4])):
        recs = groups[key]
        ok = [r for r in recs if r.status == "ok"]
        err = np.array([r.error_l2 for r in recs if math.isfinite(r.error_l2)])
        bnd = np.array([r.bound_l2 for r in ok])
        nan = float("nan")
        rows.append(dict(
            input_kind=key[0], snr_db=key[1], eps_rule=key[2], n_eta=key[3], N=key[4], count=len(recs),
            ok=len(ok),
            error_l2_median=float(np.median(err)) if err.size else nan,
            error_l2_min=float(err.min()) if err.size else nan,
            error_l2_max=float(err.max()) if err.size else nan,
            bound_l2_median=float(np.median(bnd)) if bnd.size else nan,
            error_sq_median=float(np.median(err ** 2)) if err.size else nan,
            bound_sq_median=float(np.median(bnd ** 2)) if bnd.size else nan,
            coverage=float(np.mean([r.covered for r in recs])),
            prob=ok[0].prob if ok else nan,
        ))
    by_curve = defaultdict(list)
    for row in rows:
        by_curve[(row["input_kind"], row["snr_db"], row["eps_rule"], row["n_eta"])].append(row)
    for curve in by_curve.values():
        Ns = [r["N"] for r in curve]
        b_slope = loglog_slope(Ns, [r["bound_sq_median"] for r in curve])
        e_slope = loglog_slope(Ns, [r["error_sq_median"] for r in curve])
        for r in curve:
            r["bound_sq_slope"] = b_slope
            r["error_sq_slope"] = e_slope
    return rows


def records_as_rows(records) -> list:
    rows = []
    for rec in records:
        d = asdict(rec)
        rows.append(d)
    return rows


def write_outputs(records, summary, out_dir, figures: bool = True) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records_csv(out / "records.csv", RECORD_COLUMNS, records_as_rows(records))
    write_records_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    written = [out / "records.csv", out / "summary.csv"]
    if figures:
        from .plotting import plot_summary

        written += plot_summary(summary, out / "figures")
    return written


def record_from_row(row: dict) -> ExperimentRecord:
    """Inverse of the records.csv serialization."""
    kwargs = {}
    for f in fields(ExperimentRecord):
        v = row[f.name]
        if f.type in ("int",):
            v = int(v)
        elif f.type in ("float",):
            v = float(v)
        elif f.type in ("bool",):
            v = v == "true"
        kwargs[f.name] = v
    return ExperimentRecord(**kwargs)
