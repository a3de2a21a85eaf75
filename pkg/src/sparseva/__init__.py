"""Sparse estimation with a validation-type constraint, and finite-sample error bounds for it."""
from .bounds import (
    BoundResult,
    GeneralBoundInputs,
    SparseBoundInputs,
    SubspaceSupport,
    general_bound,
    general_bound_terms,
    sparse_bound,
    weak_sparsity_tail,
    weak_sparsity_tail_bound,
)
from .core import (
    ConvergenceError,
    DomainError,
    EpsRule,
    InvalidConfigError,
    RankError,
    RegressionProblem,
    SparsevaConfig,
    SparsevaError,
    SparsevaSolution,
    TrueModel,
    UndefinedMultiplierError,
    resolve_epsilon,
)
from .curvature import CurvatureCache, CurvatureEstimate, estimate_kappa_alpha
from .estimators import FIRRegressors, SparsevaRegressor
from .solver import gradient, lagrange_multiplier, least_squares, loss, solve_sparseva, solve_sparseva_eps
from .stats import chi2_lower_quantile, chi2_upper_quantile

__version__ = "0.1.0"
