"""Chi-square quantiles, Gaussian helpers and seeded random streams.

The chi-square CDF goes through the regularized incomplete gamma function
(power series below ``x = a + 1``, Lentz continued fraction above), so no
special-function library is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import DomainError, RankError

_EPS = 1e-16
_TINY = 1e-300
_MAX_TERMS = 100_000


def _log_prefactor(a: float, x: float) -> float:
    return a * math.log(x) - x - math.lgamma(a)


def _gamma_series(a: float, x: float) -> float:
    """Regularized lower P(a, x) by power series; accurate for x < a + 1."""
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(_log_prefactor(a, x))


def _gamma_cf(a: float, x: float) -> float:
    """Regularized upper Q(a, x) by modified Lentz; accurate for x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(_log_prefactor(a, x))


def gammainc_pq(a: float, x: float) -> tuple[float, float]:
    """Return ``(P(a, x), Q(a, x))``, each computed on its accurate side."""
    if a <= 0:
        raise DomainError("shape parameter must be positive")
    if x <= 0:
        return 0.0, 1.0
    if x < a + 1.0:
        p = _gamma_series(a, x)
        return p, 1.0 - p
    q = _gamma_cf(a, x)
    return 1.0 - q, q


def chi2_cdf(x: float, dof: int) -> float:
    return gammainc_pq(dof / 2.0, x / 2.0)[0]


def chi2_sf(x: float, dof: int) -> float:
    return gammainc_pq(dof / 2.0, x / 2.0)[1]


def chi2_pdf(x: float, dof: int) -> float:
    if x <= 0:
        return 0.0
    a = dof / 2.0
    return 0.5 * math.exp((a - 1.0) * math.log(x / 2.0) - x / 2.0 - math.lgamma(a))


def _check_dof(dof) -> int:
    if int(dof) != dof or dof < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof!r}")
    return int(dof)


# tails below this underflow inside the incomplete gamma evaluation
MIN_TAIL = 1e-100


def _check_prob(p: float, name: str) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"{name} must lie strictly between 0 and 1, got {p!r}")
    if min(p, 1.0 - p) < MIN_TAIL:
        raise DomainError(f"{name}={p!r} is too close to 0 or 1 (limit {MIN_TAIL:g})")
    return float(p)


def _wilson_hilferty(p_lower: float, dof: int) -> float:
    # starting point only; Newton below does the real work
    z = math.sqrt(2.0) * _erfinv(2.0 * p_lower - 1.0)
    c = 2.0 / (9.0 * dof)
    return max(dof * (1.0 - c + z * math.sqrt(c)) ** 3, 1e-8)


def _erfinv(y: float) -> float:
    # Winitzki approximation, then two Newton steps on math.erf
    a = 0.147
    ln = math.log(max(1.0 - y * y, _TINY))
    t = 2.0 / (math.pi * a) + ln / 2.0
    x = math.copysign(math.sqrt(math.sqrt(t * t - ln / a) - t), y)
    for _ in range(2):
        x -= (math.erf(x) - y) / (2.0 / math.sqrt(math.pi) * math.exp(-x * x))
    return x


@lru_cache(maxsize=4096)
def _chi2_quantile(p: float, dof: int, upper: bool) -> float:
    """Solve ``P(X > x) = p`` (upper) or ``P(X < x) = p``.

    The tail is passed as given so that tiny probabilities never go
    through ``1 - p``; the residual is taken on whichever tail is smaller.
    """
    p_lower = 1.0 - p if upper else p
    small = p <= 0.5
    use_upper = upper == small
    target = p if small else 1.0 - p

    def resid(x):
        lo_tail, up_tail = gammainc_pq(dof / 2.0, x / 2.0)
        # increasing in x for both branches
        return (target - up_tail) if use_upper else (lo_tail - target)

    x = _wilson_hilferty(p_lower, dof)
    lo, hi = 0.0, x
    while resid(hi) < 0:
        lo, hi = hi, 2.0 * hi + 1.0
    for _ in range(300):
        r = resid(x)
        if r == 0:
            return x
        if r < 0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        dens = chi2_pdf(x, dof)
        step = r / dens if dens > 0 else math.inf
        x_new = x - step
        if not (lo < x_new < hi) and not use_upper and r > 0:
            # near zero the lower tail behaves like x**(dof/2)
            x_new = x * (target / (r + target)) ** (2.0 / dof)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * x or hi - lo <= 1e-15 * hi:
            return x_new
        x = x_new
    return x


def chi2_upper_quantile(beta: float, dof: int) -> float:
    """Value ``x`` with ``P(X < x) = 1 - beta`` for ``X ~ chi2(dof)``."""
    return _chi2_quantile(_check_prob(beta, "beta"), _check_dof(dof), True)


def chi2_lower_quantile(alpha: float, dof: int) -> float:
    """Value ``x`` with ``P(X < x) = alpha`` for ``X ~ chi2(dof)``."""
    return _chi2_quantile(_check_prob(alpha, "alpha"), _check_dof(dof), False)


@dataclass(frozen=True)
class ChiSquareQuantileQuery:
    beta: float
    dof: int

    def __post_init__(self):
        _check_prob(self.beta, "beta")
        _check_dof(self.dof)

    def value(self) -> float:
        return chi2_upper_quantile(self.beta, self.dof)


def gaussian_pdf(x, sigma2: float):
    if not sigma2 > 0:
        raise DomainError("variance must be positive")
    x = np.asarray(x, dtype=float)
    out = np.exp(-x * x / (2.0 * sigma2)) / math.sqrt(2.0 * math.pi * sigma2)
    return float(out) if out.ndim == 0 else out


def derive_seed(root_seed: int, *key: int) -> int:
    """Deterministic 63-bit child seed for stream ``key`` under ``root_seed``."""
    ss = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def sample_gaussian_matrix(n: int, N: int, sigma, seed) -> np.ndarray:
    """``n x N`` matrix with i.i.d. ``N(0, sigma)`` columns."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape != (n, n):
        raise DomainError(f"sigma must be {n}x{n}, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T):
        raise RankError("sigma is not symmetric")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise RankError(f"sigma is not positive definite: {exc}") from None
    z = make_rng(seed).standard_normal((n, N))
    return chol @ z
