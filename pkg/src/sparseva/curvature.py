"""Empirical curvature lower bound for Sigma-Gaussian regressor matrices.

Draw many ``n x N`` matrices with i.i.d. ``N(0, Sigma)`` columns, take the
smallest eigenvalue of ``Phi Phi^T / N`` for each, and read off the lower
``alpha`` quantile ``w_min``.  The curvature bound is ``w_min / 2``.
"""
from __future__ import annotations

import csv
import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .core import InvalidConfigError, RankError
from .stats import derive_seed, make_rng

MIN_TRIALS = 1000
DEFAULT_TRIALS = 10_000
# floats per block of sampled matrices; keeps memory bounded at large N
_BLOCK_BUDGET = 2_000_000


def smallest_eigenvalue(m) -> float:
    """Smallest eigenvalue of a symmetric matrix (LAPACK symmetric solver)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise InvalidConfigError("matrix must be square")
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-14 * max(1.0, float(np.max(np.abs(m))))):
        raise InvalidConfigError("matrix must be symmetric")
    return float(np.linalg.eigvalsh(m)[0])


def sigma_digest(sigma) -> str:
    arr = np.ascontiguousarray(np.atleast_2d(np.asarray(sigma, dtype="<f8")))
    h = hashlib.sha256(repr(arr.shape).encode() + arr.tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class CurvatureEstimate:
    kappa_alpha: float
    w_min: float
    alpha: float
    trials: int
    n: int
    N: int
    seed: int
    sigma_digest: str

    def __post_init__(self):
        if not self.w_min > 0:
            raise RankError(f"empirical w_min={self.w_min} is not positive; increase N")


def block_size(n: int, N: int) -> int:
    return int(max(1, min(256, _BLOCK_BUDGET // (n * N))))


def _block_min_eigs(chol: np.ndarray, N: int, count: int, seed: int) -> np.ndarray:
    n = chol.shape[0]
    z = make_rng(seed).standard_normal((count, n, N))
    phi = chol @ z
    gram = phi @ phi.transpose(0, 2, 1) / N
    return np.linalg.eigvalsh(gram)[:, 0]


def _block_job(args):
    chol, N, count, seed = args
    return _block_min_eigs(chol, N, count, seed)


def sample_min_eigenvalues(sigma, n: int, N: int, trials: int, seed: int, jobs: int = 1) -> np.ndarray:
    """Smallest eigenvalues of ``trials`` independent ``Phi Phi^T / N`` draws.

    Trials are split into fixed-size blocks, block ``b`` seeded from
    ``(seed, b)``, so the output does not depend on ``jobs``.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape != (n, n):
        raise InvalidConfigError(f"sigma must be {n}x{n}, got {sigma.shape}")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise RankError(f"sigma is not positive definite: {exc}") from None
    bs = block_size(n, N)
    tasks = []
    for b, start in enumerate(range(0, trials, bs)):
        tasks.append((chol, N, min(bs, trials - start), derive_seed(seed, b)))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_block_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        parts = [_block_job(t) for t in tasks]
    return np.concatenate(parts)


def lower_quantile(values, alpha: float) -> float:
    """Lower empirical quantile: the ``ceil(alpha * T)``-th smallest value."""
    v = np.sort(np.asarray(values, dtype=float))
    k = max(1, math.ceil(alpha * v.size))
    return float(v[k - 1])


def estimate_kappa_alpha(sigma, n: int, N: int, alpha: float = 0.02, trials: int = DEFAULT_TRIALS,
                         seed: int = 0, jobs: int = 1) -> CurvatureEstimate:
    if trials < MIN_TRIALS:
        raise InvalidConfigError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if not 0 < alpha < 1:
        raise InvalidConfigError("alpha must lie in (0, 1)")
    if N < n:
        raise InvalidConfigError("need N >= n")
    eigs = sample_min_eigenvalues(sigma, n, N, trials, seed, jobs=jobs)
    w_min = lower_quantile(eigs, alpha)
    return CurvatureEstimate(kappa_alpha=w_min / 2.0, w_min=w_min, alpha=float(alpha), trials=int(trials),
                             n=int(n), N=int(N), seed=int(seed), sigma_digest=sigma_digest(sigma))





class CurvatureCache:
    """CSV-backed store of estimates keyed by (digest, n, N, alpha, trials, seed).

    Columns: ``sigma_digest,n,N,alpha,trials,seed,w_min,kappa_alpha``.
    """

    columns = ["sigma_digest", "n", "N", "alpha", "trials", "seed", "w_min", "kappa_alpha"]

    def __init__(self, path):
        self.path = Path(path)
        self._entries = {}
        if self.path.exists():
            with open(self.path, newline="") as fh:
                for row in csv.DictReader(fh):
                    est = CurvatureEstimate(
                        kappa_alpha=float(row["kappa_alpha"]), w_min=float(row["w_min"]),
                        alpha=float(row["alpha"]), trials=int(row["trials"]), n=int(row["n"]),
                        N=int(row["N"]), seed=int(row["seed"]), sigma_digest=row["sigma_digest"])
                    self._entries[self._key_of(est)] = est

    @staticmethod
    def _key_of(est: CurvatureEstimate):
        return (est.sigma_digest, est.n, est.N, repr(est.alpha), est.trials, est.seed)

    def get(self, sigma, n, N, alpha, trials, seed):
        return self._entries.get((sigma_digest(sigma), int(n), int(N), repr(float(alpha)), int(trials), int(seed)))

    def put(self, est: CurvatureEstimate) -> None:
        self._entries[self._key_of(est)] = est
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns, lineterminator="\n")
            writer.writeheader()
            for key in sorted(self._entries):
                row = asdict(self._entries[key])
                writer.writerow({c: (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in self.columns})
        os.replace(tmp, self.path)

    def get_or_estimate(self, sigma, n, N, alpha=0.02, trials=DEFAULT_TRIALS, seed=0, jobs=1) -> CurvatureEstimate:
        est = self.get(sigma, n, N, alpha, trials, seed)
        if est is None:
            est = estimate_kappa_alpha(sigma, n, N, alpha, trials, seed, jobs=jobs)
            self.put(est)
        return est
