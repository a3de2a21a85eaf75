"""scikit-learn compatible wrappers.

:class:`SparsevaRegressor` takes the usual ``X`` of shape
``(n_samples, n_features)`` and fits without an intercept, matching the
linear regression model used throughout the package.  :class:`FIRRegressors`
turns an input signal into the lagged regressor matrix.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import RegressionProblem, SparsevaConfig
from .solver import lagrange_multiplier, solve_sparseva


class SparsevaRegressor(RegressorMixin, BaseEstimator):
    """Minimum-l1 estimator whose loss is at most ``(1 + eps)`` times the least-squares loss.

    Parameters
    ----------
    eps_rule : str or float, default="PEC"
        ``"PEC"``, ``"AIC"``, ``"BIC"``, ``"explicit:<value>"`` or a
        non-negative number used as the slack directly.
    tol : float, default=1e-8
        Relative tolerance on the loss constraint.
    max_iter : int, default=10000

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    lambda_ : float
        Lagrange multiplier of the loss constraint (``inf`` when the
        least-squares fit is exact, 0 when the zero vector is feasible).
    eps_ : float
    loss_, loss_nr_ : float
        Loss at the estimate and at the least-squares fit.
    solution_ : SparsevaSolution
    """

    def __init__(self, eps_rule="PEC", tol=1e-8, max_iter=10_000):
        self.eps_rule = eps_rule
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        config = SparsevaConfig(self.eps_rule, solver_tol=self.tol, max_iter=self.max_iter)
        self.problem_ = RegressionProblem.from_samples(X, y)
        sol = solve_sparseva(self.problem_, config)
        self.solution_ = sol
        self.coef_ = sol.theta_hat.copy()
        self.lambda_ = sol.lambda_eps
        self.eps_ = sol.eps
        self.loss_ = sol.loss_at_solution
        self.loss_nr_ = sol.loss_nr
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_

    def multiplier_from_gradient(self):
        """``1 / ||grad L(coef_)||_inf``; an independent check on ``lambda_``."""
        check_is_fitted(self, "coef_")
        return lagrange_multiplier(self.problem_, self.solution_)


class FIRRegressors(TransformerMixin, BaseEstimator):
    """Map a 1-D input signal to rows ``[u(t), u(t-1), ..., u(t-order+1)]``.

    Rows start at ``t = warmup`` (default ``order - 1``) and advance by
    ``stride``.  Apply :meth:`select` to the output signal to get the
    matching targets.
    """

    def __init__(self, order=35, warmup=None, stride=1):
        self.order = order
        self.warmup = warmup
        self.stride = stride

    def _times(self, length):
        start = self.order - 1 if self.warmup is None else self.warmup
        if start < self.order - 1:
            raise ValueError(f"warmup {start} too short for order {self.order}")
        return np.arange(start, length, self.stride)

    def fit(self, u, y=None):
        u = check_array(np.asarray(u, dtype=float).reshape(-1, 1), dtype=np.float64)
        if self.order < 1 or self.stride < 1:
            raise ValueError("order and stride must be positive")
        self.n_features_in_ = 1
        return self

    def transform(self, u):
        check_is_fitted(self, "n_features_in_")
        u = check_array(np.asarray(u, dtype=float).reshape(-1, 1), dtype=np.float64).ravel()
        t = self._times(u.size)
        return u[t[:, None] - np.arange(self.order)[None, :]]

    def select(self, y):
        """Targets ``y(t)`` at the rows produced by :meth:`transform`."""
        y = np.asarray(y, dtype=float).ravel()
        return y[self._times(y.size)]
