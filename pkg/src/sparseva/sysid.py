"""Synthetic FIR identification data.

A random stable SISO system supplies the true FIR coefficients (its first
``n`` impulse-response taps).  Outputs are generated by the truncated FIR
itself, so the regression ``Y = Phi^T theta* + e`` holds exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import lfilter

from .core import InvalidConfigError, RegressionProblem, TrueModel, lq_radius
from .stats import make_rng

MAX_POLE_RADIUS = 0.9
MAX_ZERO_RADIUS = 1.0
AR1_GAIN = 0.9798
AR1_POLE = 0.2
WARMUP_EXTRA = 50
GAIN_HORIZON = 200


class InputKind(str, Enum):
    WHITE = "white"
    AR1 = "ar1"

    @classmethod
    def parse(cls, value) -> "InputKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        aliases = {"white": cls.WHITE, "ar1": cls.AR1, "ar1filtered": cls.AR1, "colored": cls.AR1, "coloured": cls.AR1}
        try:
            return aliases[text]
        except KeyError:
            raise InvalidConfigError(f"unknown input kind {value!r}") from None


@dataclass(frozen=True)
class RandomSystem:
    """``gain * prod(1 - z q^-1) / prod(1 - p q^-1)``, so ``h(0) == gain``."""

    poles: tuple
    zeros: tuple
    gain: float
    order: int

    @property
    def numerator(self) -> np.ndarray:
        return self.gain * np.real(np.poly(self.zeros)) if self.zeros else np.array([self.gain])

    @property
    def denominator(self) -> np.ndarray:
        return np.real(np.poly(self.poles)) if self.poles else np.array([1.0])

    def impulse_response(self, length: int) -> np.ndarray:
        delta = np.zeros(length)
        delta[0] = 1.0
        return lfilter(self.numerator, self.denominator, delta)


def _conjugate_set(rng, count: int, max_radius: float) -> list:
    roots = []
    while len(roots) < count:
        r = rng.uniform(0.0, max_radius)
        if count - len(roots) >= 2 and rng.random() < 0.5:
            w = rng.uniform(0.0, math.pi)
            z = r * complex(math.cos(w), math.sin(w))
            roots += [z, z.conjugate()]
        else:
            roots.append(complex(r if rng.random() < 0.5 else -r, 0.0))
    return roots


def random_stable_system(seed) -> RandomSystem:
    """Random order-1..10 system, poles inside radius 0.9, zeros inside the unit disk.

    The gain puts the l2 norm of the first 200 impulse-response taps
    uniformly in [0.5, 2].
    """
    rng = make_rng(seed)
    order = int(rng.integers(1, 11))
    poles = _conjugate_set(rng, order, MAX_POLE_RADIUS)
    zeros = _conjugate_set(rng, int(rng.integers(0, order + 1)), MAX_ZERO_RADIUS)
    target = rng.uniform(0.5, 2.0)
    unit = RandomSystem(tuple(poles), tuple(zeros), 1.0, order)
    gain = target / float(np.linalg.norm(unit.impulse_response(GAIN_HORIZON)))
    return RandomSystem(tuple(poles), tuple(zeros), float(gain), order)


def fir_truth(system: RandomSystem, n: int) -> np.ndarray:
    return system.impulse_response(n)


@dataclass(frozen=True)
class SignalSpec:
    """One data realization: input type, number of regression rows, SNR, seed."""

    input_kind: InputKind
    N: int
    snr_db: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "input_kind", InputKind.parse(self.input_kind))
        if int(self.N) < 1:
            raise InvalidConfigError("N must be positive")

    def stride(self, n: int) -> int:
        # coloured input: keep every n-th output so regressor columns do not overlap
        return n if self.input_kind is InputKind.AR1 else 1

    def warmup(self, n: int) -> int:
        return n + WARMUP_EXTRA

    def raw_length(self, n: int) -> int:
        return self.warmup(n) + (self.N - 1) * self.stride(n) + 1


class Signals(NamedTuple):
    u: np.ndarray
    y: np.ndarray
    y_clean: np.ndarray
    sigma_e2: float
    warmup: int
    stride: int


def generate_input(kind, length: int, rng) -> np.ndarray:
    kind = InputKind.parse(kind)
    w = rng.standard_normal(length)
    if kind is InputKind.WHITE:
        return w
    return lfilter([AR1_GAIN], [1.0, -AR1_POLE], w)


def regression_times(length: int, n: int, warmup: int, stride: int) -> np.ndarray:
    if warmup < n - 1:
        raise InvalidConfigError(f"warmup {warmup} too short for {n} lags")
    return np.arange(warmup, length, stride)


def fir_regression(u, y, n: int, warmup: int, stride: int = 1) -> RegressionProblem:
    """Regression with columns ``[u(t), u(t-1), ..., u(t-n+1)]`` at ``t = warmup, warmup+stride, ...``."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if u.shape != y.shape:
        raise InvalidConfigError("u and y must have the same length")
    t = regression_times(u.shape[0], n, warmup, stride)
    if t.size < n:
        raise InvalidConfigError(f"only {t.size} regression rows available, need at least n={n}")
    lags = t[None, :] - np.arange(n)[:, None]
    return RegressionProblem(u[lags], y[t])


def simulate(system_or_theta, spec: SignalSpec, n: int) -> Signals:
    theta = (fir_truth(system_or_theta, n) if isinstance(system_or_theta, RandomSystem)
             else np.asarray(system_or_theta, dtype=float))
    if theta.shape != (n,):
        raise InvalidConfigError(f"FIR truth must have length n={n}")
    rng = make_rng(spec.seed)
    length = spec.raw_length(n)
    warmup, stride = spec.warmup(n), spec.stride(n)
    u = generate_input(spec.input_kind, length, rng)
    y_clean = np.convolve(u, theta)[:length]
    t = regression_times(length, n, warmup, stride)
    if math.isinf(spec.snr_db) and spec.snr_db > 0:
        sigma_e2 = 0.0
    else:
        sigma_e2 = float(np.var(y_clean[t])) / 10.0 ** (spec.snr_db / 10.0)
    e = math.sqrt(sigma_e2) * rng.standard_normal(length)
    return Signals(u=u, y=y_clean + e, y_clean=y_clean, sigma_e2=sigma_e2, warmup=warmup, stride=stride)


def synthesize(system, spec: SignalSpec, n: int, q: float = 0.5):
    """Return ``(RegressionProblem, TrueModel)`` for one realization."""
    theta = fir_truth(system, n) if isinstance(system, RandomSystem) else np.asarray(system, dtype=float)
    sig = simulate(theta, spec, n)
    problem = fir_regression(sig.u, sig.y, n, sig.warmup, sig.stride)
    truth = TrueModel(theta_star=theta, sigma_e2=sig.sigma_e2, q=q, r_q=lq_radius(theta, q))
    return problem, truth


def sigma_for(kind, n: int) -> np.ndarray:
    """Covariance of one regressor column: identity, or unit AR(1) Toeplitz."""
    kind = InputKind.parse(kind.input_kind if isinstance(kind, SignalSpec) else kind)
    if kind is InputKind.WHITE:
        return np.eye(n)
    return toeplitz(AR1_POLE ** np.arange(n))


def s_max(sigma) -> float:
    return float(np.max(np.diag(np.atleast_2d(sigma))))
