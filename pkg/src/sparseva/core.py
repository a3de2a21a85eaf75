"""Shared domain types for SPARSEVA regression problems.

Matrix convention follows the regression model ``Y = Phi.T @ theta + e``:
``phi`` is ``(n, N)`` with one regressor vector per column.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

PD_RELATIVE_TOL = 1e-10


class SparsevaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigError(SparsevaError, ValueError):
    pass


class DomainError(SparsevaError, ValueError):
    pass


class RankError(SparsevaError, np.linalg.LinAlgError):
    pass


class UndefinedMultiplierError(SparsevaError, ArithmeticError):
    pass


class ConvergenceError(SparsevaError, RuntimeError):
    """Iteration limit hit; ``best`` holds the last usable iterate."""

    def __init__(self, message: str, best: Optional[np.ndarray] = None):
        super().__init__(message)
        self.best = best


def _frozen(a) -> np.ndarray:
    # C order always, so results do not depend on how the caller laid out memory
    arr = np.array(a, dtype=float, order="C")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RegressionProblem:
    """Regressor matrix ``phi`` (n x N) and output vector ``y`` (length N)."""

    phi: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        phi = _frozen(self.phi)
        y = _frozen(self.y).ravel()
        if phi.ndim == 1:
            phi = _frozen(phi[None, :])
        if phi.ndim != 2:
            raise InvalidConfigError("phi must be a 2-d array of shape (n, N)")
        n, N = phi.shape
        if y.shape[0] != N:
            raise InvalidConfigError(f"y has length {y.shape[0]}, expected N={N}")
        if N < n:
            raise InvalidConfigError(f"need N >= n, got n={n}, N={N}")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
            raise InvalidConfigError("phi and y must be finite")
        eig = np.linalg.eigvalsh(phi @ phi.T)
        if eig[-1] <= 0 or eig[0] <= PD_RELATIVE_TOL * eig[-1]:
            raise RankError("phi @ phi.T is not positive definite (no persistent excitation)")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def N(self) -> int:
        return self.phi.shape[1]

    @classmethod
    def from_samples(cls, X, y) -> "RegressionProblem":
        """Build from a samples-by-features matrix (the transpose of ``phi``)."""
        return cls(np.asarray(X, dtype=float).T, y)


@dataclass(frozen=True)
class TrueModel:
    theta_star: np.ndarray
    sigma_e2: float
    q: float = 1.0
    r_q: float = math.inf

    def __post_init__(self):
        theta = _frozen(self.theta_star).ravel()
        object.__setattr__(self, "theta_star", theta)
        if self.sigma_e2 < 0:
            raise InvalidConfigError("sigma_e2 must be nonnegative")
        if not 0.0 <= self.q <= 1.0:
            raise InvalidConfigError("q must lie in [0, 1]")
        if self.r_q < 0:
            raise InvalidConfigError("r_q must be nonnegative")
        if lq_radius(theta, self.q) > self.r_q * (1 + 1e-12):
            raise InvalidConfigError(f"theta_star lies outside the l_{self.q} ball of radius {self.r_q}")

    @property
    def n(self) -> int:
        return self.theta_star.shape[0]


def lq_radius(theta, q: float) -> float:
    """``sum |theta_i|**q``, with the ``0**0 = 0`` convention at ``q == 0``."""
    a = np.abs(np.asarray(theta, dtype=float))
    if q == 0:
        return float(np.count_nonzero(a))
    return float(np.sum(a ** q))


class EpsRule(str, Enum):
    PEC = "PEC"
    AIC = "AIC"
    BIC = "BIC"
    EXPLICIT = "EXPLICIT"


@dataclass(frozen=True)
class SparsevaConfig:
    """How to pick the slack ``eps_N`` plus inner-solver tolerances.

    ``eps_rule`` accepts an :class:`EpsRule`, one of the strings ``"PEC"``,
    ``"AIC"``, ``"BIC"``, ``"explicit:<value>"``, or a bare positive float
    (explicit value).
    """

    eps_rule: Union[EpsRule, str, float] = EpsRule.PEC
    eps_value: Optional[float] = None
    solver_tol: float = 1e-8
    max_iter: int = 10_000

    def __post_init__(self):
        rule, value = _parse_rule(self.eps_rule, self.eps_value)
        object.__setattr__(self, "eps_rule", rule)
        object.__setattr__(self, "eps_value", value)
        if not self.solver_tol > 0:
            raise InvalidConfigError("solver_tol must be positive")
        if int(self.max_iter) < 1:
            raise InvalidConfigError("max_iter must be a positive integer")

    @property
    def label(self) -> str:
        if self.eps_rule is EpsRule.EXPLICIT:
            return f"explicit:{self.eps_value!r}"
        return self.eps_rule.value


def _parse_rule(rule, value):
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        rule, value = EpsRule.EXPLICIT, float(rule)
    elif isinstance(rule, str) and not isinstance(rule, EpsRule):
        text = rule.strip()
        if ":" in text:
            head, _, tail = text.partition(":")
            try:
                value = float(tail)
            except ValueError:
                raise InvalidConfigError(f"bad explicit eps value {tail!r}") from None
            text = head
        try:
            rule = EpsRule(text.upper())
        except ValueError:
            raise InvalidConfigError(f"unknown eps rule {rule!r}") from None
    if rule is EpsRule.EXPLICIT:
        if value is None or not math.isfinite(value) or value <= 0:
            raise InvalidConfigError(f"explicit eps must be a positive number, got {value!r}")
        value = float(value)
    else:
        value = None
    return rule, value


def resolve_epsilon(config: SparsevaConfig, n: int, N: int) -> float:
    """Slack ``eps_N``: PEC ``n/N``, AIC ``2n/N``, BIC ``n*ln(N)/N``."""
    if n < 1 or N < 1:
        raise InvalidConfigError("n and N must be positive")
    rule = config.eps_rule
    if rule is EpsRule.PEC:
        eps = n / N
    elif rule is EpsRule.AIC:
        eps = 2 * n / N
    elif rule is EpsRule.BIC:
        eps = n * math.log(N) / N
    else:
        eps = config.eps_value
    if not eps > 0:
        # BIC at N == 1 gives log(1) = 0
        raise InvalidConfigError(f"rule {config.label} gives nonpositive eps={eps} at n={n}, N={N}")
    return eps


@dataclass(frozen=True)
class SparsevaSolution:
    theta_hat: np.ndarray
    loss_at_solution: float
    loss_nr: float
    lambda_eps: float
    eps: float
    iterations: int
    constraint_active: bool
    theta_nr: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "theta_hat", _frozen(self.theta_hat))
        if self.theta_nr is not None:
            object.__setattr__(self, "theta_nr", _frozen(self.theta_nr))

    def is_zero(self, tol: float = 1e-8) -> bool:
        return bool(np.max(np.abs(self.theta_hat)) < tol)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.theta_hat)
