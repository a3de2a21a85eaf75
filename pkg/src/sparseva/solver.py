"""SPARSEVA estimate for quadratic loss.

Solves ``min ||theta||_1  s.t.  L(theta) <= L(theta_NR) * (1 + eps)`` with
``L(theta) = ||Y - Phi.T theta||^2 / (2N)`` by bisecting the Lagrange
multiplier ``lam`` of the penalized form ``||theta||_1 + lam * L(theta)``.
Each penalized problem is a LASSO with weight ``1/lam`` on the l1 term and
is solved by cyclic coordinate descent on the Gram matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConvergenceError,
    InvalidConfigError,
    RegressionProblem,
    SparsevaConfig,
    SparsevaSolution,
    UndefinedMultiplierError,
    resolve_epsilon,
)

MULTIPLIER_OVERFLOW = 1e12
# L(theta_NR) below this fraction of L(0) is treated as an exact fit
_INTERPOLATION_RATIO = 1e-20
_STEP_TOL = 1e-15


class MultiplierOverflowError(UndefinedMultiplierError, OverflowError):
    pass


def least_squares(problem: RegressionProblem) -> np.ndarray:
    """Non-regularized estimate ``(Phi Phi^T)^-1 Phi Y``."""
    theta, *_ = np.linalg.lstsq(problem.phi.T, problem.y, rcond=None)
    return theta


def loss(problem: RegressionProblem, theta) -> float:
    r = problem.y - problem.phi.T @ np.asarray(theta, dtype=float).reshape(problem.n)
    return float(r @ r) / (2.0 * problem.N)


def gradient(problem: RegressionProblem, theta) -> np.ndarray:
    """``-(1/N) Phi (Y - Phi^T theta)``."""
    r = problem.y - problem.phi.T @ np.asarray(theta, dtype=float).reshape(problem.n)
    return -(problem.phi @ r) / problem.N


class _Quadratic:
    """Gram-form loss ``0.5 t'Gt - c't + yy/(2N)`` shared across many solves."""

    def __init__(self, problem: RegressionProblem):
        N = problem.N
        self.G = (problem.phi @ problem.phi.T) / N
        self.c = (problem.phi @ problem.y) / N
        self.half_yy = float(problem.y @ problem.y) / (2.0 * N)
        self.diag = np.diag(self.G).copy()
        self.n = problem.n

    def value(self, theta, Gtheta=None) -> float:
        if Gtheta is None:
            Gtheta = self.G @ theta
        return max(0.5 * float(theta @ Gtheta) - float(self.c @ theta) + self.half_yy, 0.0)


@dataclass(frozen=True)
class LassoSubproblem:
    """Penalized form ``||theta||_1 + lam * L(theta)`` of one problem."""

    problem: RegressionProblem
    lam: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidConfigError("lambda must be nonnegative")


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _duality_gap(quad: _Quadratic, theta, Gtheta, mu: float) -> tuple[float, float]:
    """Primal value and duality gap of ``L(theta) + mu ||theta||_1``."""
    L = quad.value(theta, Gtheta)
    primal = L + mu * float(np.abs(theta).sum())
    grad_inf = float(np.max(np.abs(Gtheta - quad.c)))
    s = 1.0 if grad_inf <= mu else mu / grad_inf
    # dual point u = s * r / N, where r is the residual
    dual = s * (2.0 * quad.half_yy - float(quad.c @ theta)) - s * s * L
    return primal, max(primal - dual, 0.0)


def _coordinate_descent(quad: _Quadratic, mu: float, theta, tol: float, max_iter: int):
    """Cyclic CD for ``L(theta) + mu ||theta||_1`` from warm start ``theta``.

    Returns ``(theta, sweeps, gap)``.  After each full pass the current
    support is swept on its own until it settles.
    """
    G, c, diag, n = quad.G, quad.c, quad.diag, quad.n
    theta = np.array(theta, dtype=float)
    Gtheta = G @ theta
    cols = [G[:, j] for j in range(n)]
    sweeps = 0

    def sweep(indices):
        max_step = scale = 0.0
        for j in indices:
            old = theta[j]
            new = _soft(c[j] - Gtheta[j] + diag[j] * old, mu) / diag[j]
            if new != old:
                Gtheta[:] += cols[j] * (new - old)
                theta[j] = new
                max_step = max(max_step, abs(new - old))
            scale = max(scale, abs(new))
        return max_step, scale

    full = range(n)
    while sweeps < max_iter:
        max_step, scale = sweep(full)
        sweeps += 1
        active = np.flatnonzero(theta)
        while active.size and sweeps < max_iter:
            a_step, a_scale = sweep(active)
            sweeps += 1
            if a_step <= _STEP_TOL * a_scale:
                break
        Gtheta[:] = G @ theta
        primal, gap = _duality_gap(quad, theta, Gtheta, mu)
        if gap <= tol * max(primal, 1e-300) or max_step <= _STEP_TOL * scale or scale == 0.0:
            return theta, sweeps, gap
    raise ConvergenceError(f"coordinate descent did not converge in {max_iter} sweeps", best=theta)


def solve_lasso(sub: LassoSubproblem, tol: float = 1e-14, max_iter: int = 10_000, theta0=None) -> np.ndarray:
    """Minimize ``||theta||_1 + lam * L(theta)``.

    ``lam == 0`` gives the zero vector; ``lam == inf`` gives least squares.
    """
    problem = sub.problem
    if sub.lam == 0:
        return np.zeros(problem.n)
    if math.isinf(sub.lam):
        return least_squares(problem)
    quad = _Quadratic(problem)
    start = np.zeros(problem.n) if theta0 is None else np.asarray(theta0, dtype=float)
    theta, _, _ = _coordinate_descent(quad, 1.0 / sub.lam, start, tol, max_iter)
    return theta


def solve_sparseva(problem: RegressionProblem, config: SparsevaConfig = SparsevaConfig()) -> SparsevaSolution:
    eps = resolve_epsilon(config, problem.n, problem.N)
    return _solve(problem, eps, config.solver_tol, config.max_iter)


def solve_sparseva_eps(problem: RegressionProblem, eps: float, solver_tol: float = 1e-8, max_iter: int = 10_000) -> SparsevaSolution:
    """Same as :func:`solve_sparseva` with an explicit slack value."""
    if not eps > 0:
        raise InvalidConfigError("eps must be positive")
    return _solve(problem, float(eps), solver_tol, max_iter)


def _solve(problem: RegressionProblem, eps: float, tol: float, max_iter: int) -> SparsevaSolution:
    quad = _Quadratic(problem)
    theta_nr = least_squares(problem)
    loss_nr = loss(problem, theta_nr)
    loss_zero = quad.half_yy
    target = loss_nr * (1.0 + eps)
    zeros = np.zeros(problem.n)

    def result(theta, L, lam, its, active):
        return SparsevaSolution(theta_hat=theta, loss_at_solution=L, loss_nr=loss_nr, lambda_eps=lam,
                                eps=eps, iterations=its, constraint_active=active, theta_nr=theta_nr)

    if loss_nr <= _INTERPOLATION_RATIO * loss_zero:
        # exact fit: the feasible set collapses to theta_NR
        return result(theta_nr, loss_nr, math.inf, 0, True)
    if loss_zero <= target:
        return result(zeros, loss_zero, 0.0, 0, loss_zero == target)

    inner_tol = 1e-16
    sweeps_total = 0
    # below lam0 the penalized minimizer is exactly zero
    lam_lo = 1.0 / float(np.max(np.abs(quad.c)))
    lam_hi = 2.0 * lam_lo
    theta_hi, sw, _ = _coordinate_descent(quad, 1.0 / lam_hi, zeros, inner_tol, max_iter)
    sweeps_total += sw
    L_hi = loss(problem, theta_hi)
    doublings = 0
    while L_hi > target:
        lam_lo = lam_hi
        lam_hi *= 2.0
        theta_hi, sw, _ = _coordinate_descent(quad, 1.0 / lam_hi, theta_hi, inner_tol, max_iter)
        sweeps_total += sw
        L_hi = loss(problem, theta_hi)
        doublings += 1
        if doublings > 200:
            raise ConvergenceError("could not bracket the multiplier", best=theta_hi)

    band = tol * loss_nr
    for it in range(max_iter):
        if L_hi >= target - band:
            return result(theta_hi, L_hi, lam_hi, sweeps_total, True)
        lam_mid = math.sqrt(lam_lo * lam_hi)
        if not lam_lo < lam_mid < lam_hi:
            break
        theta_mid, sw, _ = _coordinate_descent(quad, 1.0 / lam_mid, theta_hi, inner_tol, max_iter)
        sweeps_total += sw
        L_mid = loss(problem, theta_mid)
        if L_mid > target:
            lam_lo = lam_mid
        else:
            lam_hi, theta_hi, L_hi = lam_mid, theta_mid, L_mid
    raise ConvergenceError(
        f"multiplier bisection stalled: L={L_hi!r}, target={target!r}", best=theta_hi)


def lagrange_multiplier(problem: RegressionProblem, solution: SparsevaSolution, zero_tol: float = 1e-8) -> float:
    """``1 / ||grad L(theta_hat)||_inf``, defined only for a nonzero estimate."""
    if solution.is_zero(zero_tol):
        raise UndefinedMultiplierError("multiplier is undefined at theta_hat = 0")
    g = float(np.max(np.abs(gradient(problem, solution.theta_hat))))
    if g == 0.0 or 1.0 / g > MULTIPLIER_OVERFLOW:
        raise MultiplierOverflowError(f"multiplier exceeds {MULTIPLIER_OVERFLOW:g} (gradient norm {g:g})")
    return 1.0 / g
