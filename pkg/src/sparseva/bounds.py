"""Finite-sample error bounds for the SPARSEVA estimate.

Everything returned by :func:`general_bound` and :func:`sparse_bound` bounds
the *squared* l2 error ``||theta_hat - theta_star||_2^2``.

Support indices are 0-based.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DomainError, InvalidConfigError
from .stats import chi2_upper_quantile


@dataclass(frozen=True)
class SubspaceSupport:
    """Index set ``S`` defining ``M(S)`` (support in S) and ``M_perp(S)``."""

    s: tuple
    n: int

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.s))
        if len(set(idx)) != len(idx):
            raise InvalidConfigError("support indices must be unique")
        if not 1 <= len(idx) <= self.n:
            raise InvalidConfigError(f"support size must be in [1, {self.n}]")
        if idx[0] < 0 or idx[-1] >= self.n:
            raise InvalidConfigError(f"support indices must lie in [0, {self.n})")
        object.__setattr__(self, "s", idx)

    def __len__(self):
        return len(self.s)

    def complement(self) -> tuple:
        inside = set(self.s)
        return tuple(i for i in range(self.n) if i not in inside)

    @classmethod
    def largest(cls, theta, n_eta: int) -> "SubspaceSupport":
        """Indices of the ``n_eta`` largest-magnitude entries of ``theta``."""
        theta = np.asarray(theta, dtype=float)
        order = np.argsort(-np.abs(theta), kind="stable")
        return cls(tuple(order[:n_eta]), theta.shape[0])


def dual_norm_linf(v) -> float:
    """Dual of the l1 norm: ``max_i |v_i|``."""
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def project_onto_support(v, s: SubspaceSupport) -> np.ndarray:
    """Euclidean projection onto ``M(S)``: zero every coordinate outside ``S``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (s.n,):
        raise InvalidConfigError(f"vector has shape {v.shape}, expected ({s.n},)")
    out = np.zeros_like(v)
    idx = list(s.s)
    out[idx] = v[idx]
    return out


def subspace_compatibility(s: SubspaceSupport) -> float:
    """``sup ||u||_1 / ||u||_2`` over nonzero ``u`` in ``M(S)``, i.e. ``sqrt(|S|)``."""
    return math.sqrt(len(s))


@dataclass(frozen=True)
class GeneralBoundInputs:
    """Scalars for the two-case bound under an abstract decomposable norm.

    ``r_star_grad`` is the dual norm of the loss gradient at the truth,
    ``psi_m`` / ``psi_m_perp`` the compatibility constants of the model
    subspace and its complement, ``r_theta_perp`` the norm of the truth's
    component outside the model subspace.
    """

    kappa_L: float
    lambda_eps: float
    r_star_grad: float
    psi_m: float
    psi_m_perp: float
    r_theta_perp: float

    def __post_init__(self):
        if not (self.kappa_L > 0 and self.lambda_eps > 0):
            raise InvalidConfigError("kappa_L and lambda_eps must be positive")
        for name in ("r_star_grad", "psi_m", "psi_m_perp", "r_theta_perp"):
            if not getattr(self, name) >= 0:
                raise InvalidConfigError(f"{name} must be nonnegative")


def general_bound_case(inp: GeneralBoundInputs) -> int:
    """1 when ``lambda_eps <= 1 / r_star_grad`` (boundary included), else 2."""
    if inp.r_star_grad == 0:
        return 1
    return 1 if inp.lambda_eps <= 1.0 / inp.r_star_grad else 2


def general_bound_terms(inp: GeneralBoundInputs) -> tuple[float, float]:
    """Both branch formulas evaluated regardless of which one applies."""
    k, lam, g = inp.kappa_L, inp.lambda_eps, inp.r_star_grad
    tail = 4.0 / (k * lam) * inp.r_theta_perp
    case1 = 4.0 / (k * k * lam * lam) * inp.psi_m ** 2 + tail
    case2 = (2.0 / (k * k)) * g * g * inp.psi_m ** 2 + (8.0 / (k * k)) * g * g * inp.psi_m_perp ** 2 + tail
    return case1, case2


def general_bound(inp: GeneralBoundInputs) -> float:
    case1, case2 = general_bound_terms(inp)
    return case1 if general_bound_case(inp) == 1 else case2


def _noise_scale(sigma_e2, s_max, beta) -> float:
    if sigma_e2 < 0 or s_max < 0:
        raise DomainError("sigma_e2 and s_max must be nonnegative")
    return 2.0 * sigma_e2 * s_max * math.log(2.0 / beta)


def grad_bound_at_theta_star(N: int, n: int, sigma_e2: float, s_max: float, beta: float) -> float:
    """High-probability bound on ``||grad L(theta_star)||_inf``.

    Holds with probability at least ``1 - 2 n beta``.
    """
    return math.sqrt(_noise_scale(sigma_e2, s_max, beta) * chi2_upper_quantile(beta, N)) / N


def grad_bound_at_theta_hat(N: int, n: int, sigma_e2: float, s_max: float, beta: float, eps_N: float) -> float:
    """High-probability bound on ``||grad L(theta_hat)||_inf`` (needs ``N > n``)."""
    if N <= n:
        raise DomainError(f"need N > n, got N={N}, n={n}")
    if eps_N < 0:
        raise DomainError("eps_N must be nonnegative")
    return math.sqrt(_noise_scale(sigma_e2, s_max, beta) * chi2_upper_quantile(beta, N - n) * (1.0 + eps_N)) / N


@dataclass(frozen=True)
class SparseBoundInputs:
    n: int
    n_eta: int
    N: int
    sigma_e2: float
    s_max: float
    kappa_alpha: float
    eps_N: float
    beta: float
    alpha: float
    theta_tail_l1: float

    def __post_init__(self):
        if not 1 <= self.n_eta <= self.n:
            raise InvalidConfigError(f"n_eta must lie in [1, n={self.n}], got {self.n_eta}")
        if self.N <= self.n:
            raise DomainError(f"need N > n, got N={self.N}, n={self.n}")
        for name in ("beta", "alpha"):
            p = getattr(self, name)
            if not 0 < p < 1:
                raise InvalidConfigError(f"{name} must lie in (0, 1), got {p}")
        if not self.kappa_alpha > 0:
            raise InvalidConfigError("kappa_alpha must be positive")
        if not self.eps_N > 0:
            raise InvalidConfigError("eps_N must be positive")
        if self.sigma_e2 < 0 or self.s_max <= 0 or self.theta_tail_l1 < 0:
            raise InvalidConfigError("sigma_e2, theta_tail_l1 must be >= 0 and s_max > 0")


@dataclass(frozen=True)
class BoundResult:
    a1: float
    a2: float
    bound: float
    prob: float
    vacuous: bool = False

    @property
    def bound_l2(self) -> float:
        return math.sqrt(self.bound)


def sparse_bound(inp: SparseBoundInputs) -> BoundResult:
    """Squared-error bound ``max(a1, a2)`` for weakly sparse regression."""
    N, k = inp.N, inp.kappa_alpha
    scale = _noise_scale(inp.sigma_e2, inp.s_max, inp.beta)
    hat_sq = scale * chi2_upper_quantile(inp.beta, N - inp.n) * (1.0 + inp.eps_N)
    star_sq = scale * chi2_upper_quantile(inp.beta, N)
    tail_term = math.sqrt(16.0 * hat_sq) * inp.theta_tail_l1 / (k * N)
    a1 = 4.0 * inp.n_eta * hat_sq / (k * k * N * N) + tail_term
    a2 = (8.0 * inp.n - 6.0 * inp.n_eta) * star_sq / (k * k * N * N) + tail_term
    prob = (1.0 - inp.alpha) * (1.0 - 4.0 * inp.n * inp.beta)
    vacuous = prob <= 0
    if vacuous:
        warnings.warn(f"bound holds with nonpositive probability {prob:.4g}", RuntimeWarning, stacklevel=2)
    return BoundResult(a1=a1, a2=a2, bound=max(a1, a2), prob=prob, vacuous=vacuous)


def weak_sparsity_tail(theta_star, n_eta: int) -> float:
    """l1 norm of the ``n - n_eta`` smallest-magnitude entries of ``theta_star``."""
    a = np.sort(np.abs(np.asarray(theta_star, dtype=float)))[::-1]
    if n_eta < 1:
        raise InvalidConfigError("n_eta must be at least 1")
    return float(a[n_eta:].sum())


def weak_sparsity_tail_bound(q: float, r_q: float, n_eta: int) -> float:
    """``n_eta**(1 - 1/q) * r_q**(1/q)``, valid for truths in the l_q ball."""
    if not 0 < q <= 1:
        raise DomainError("analytic tail bound needs q in (0, 1]")
    if n_eta < 1 or r_q < 0:
        raise DomainError("need n_eta >= 1 and r_q >= 0")
    return n_eta ** (1.0 - 1.0 / q) * r_q ** (1.0 / q)
