import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sup_inner_product_l1_ball, sup_l1_over_l2
from sparseva.bounds import (
    GeneralBoundInputs,
    SparseBoundInputs,
    SubspaceSupport,
    dual_norm_linf,
    general_bound,
    general_bound_case,
    grad_bound_at_theta_hat,
    grad_bound_at_theta_star,
    project_onto_support,
    sparse_bound,
    subspace_compatibility,
    weak_sparsity_tail,
    weak_sparsity_tail_bound,
)
from sparseva.core import DomainError, InvalidConfigError

# upper 0.001 chi-square quantiles from the integrated-density oracle
CHI2_001 = {450: 548.4324093205942, 965: 1106.4773587435411, 1000: 1143.9170926705524}
LN2000 = math.log(2000.0)


def test_dual_norm_examples():
    assert dual_norm_linf([0, 0, 0]) == 0
    assert dual_norm_linf([1, -3, 2]) == 3


def test_dual_norm_sup_definition(rng):
    v = rng.standard_normal(4)
    mc = sup_inner_product_l1_ball(v, 100_000, rng)
    assert mc <= dual_norm_linf(v) + 1e-12
    assert mc == pytest.approx(dual_norm_linf(v), rel=0.01)


def test_projection_examples():
    v = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(project_onto_support(v, SubspaceSupport((0, 1, 2), 3)), v)
    np.testing.assert_array_equal(project_onto_support(v, SubspaceSupport((1,), 3)), [0, 2, 0])


def test_projection_idempotent_and_minimal(rng):
    s = SubspaceSupport((0, 3), 5)
    v = rng.standard_normal(5)
    pv = project_onto_support(v, s)
    np.testing.assert_array_equal(project_onto_support(pv, s), pv)
    for _ in range(200):
        w = project_onto_support(pv + 0.3 * rng.standard_normal(5), s)
        assert np.linalg.norm(v - pv) <= np.linalg.norm(v - w) + 1e-15


def test_l1_decomposable(rng):
    s = SubspaceSupport((1, 2), 6)
    theta = project_onto_support(rng.standard_normal(6), s)
    gamma = rng.standard_normal(6)
    gamma[list(s.s)] = 0
    assert np.abs(theta + gamma).sum() == pytest.approx(np.abs(theta).sum() + np.abs(gamma).sum())


def test_support_validation():
    with pytest.raises(InvalidConfigError):
        SubspaceSupport((), 3)
    with pytest.raises(InvalidConfigError):
        SubspaceSupport((0, 0), 3)
    with pytest.raises(InvalidConfigError):
        SubspaceSupport((3,), 3)
    assert SubspaceSupport((2, 0), 4).complement() == (1, 3)
    assert SubspaceSupport.largest([0.1, -5, 2, 0], 2).s == (1, 2)


def test_compatibility_constant(rng):
    assert subspace_compatibility(SubspaceSupport((0,), 5)) == 1
    assert subspace_compatibility(SubspaceSupport(tuple(range(9)), 12)) == 3
    mc = sup_l1_over_l2(4, 100_000, rng)
    assert mc <= 2 + 1e-12
    assert mc == pytest.approx(subspace_compatibility(SubspaceSupport((0, 1, 2, 3), 6)), rel=0.01)


def test_general_bound_case1():
    inp = GeneralBoundInputs(kappa_L=2, lambda_eps=2, r_star_grad=0.1, psi_m=1, psi_m_perp=3, r_theta_perp=0)
    assert general_bound_case(inp) == 1
    assert general_bound(inp) == 0.25


def test_general_bound_case2():
    inp = GeneralBoundInputs(kappa_L=1, lambda_eps=2, r_star_grad=1, psi_m=1, psi_m_perp=2, r_theta_perp=0)
    assert general_bound_case(inp) == 2
    assert general_bound(inp) == 34


def test_general_bound_boundary_and_zero_gradient():
    inp = GeneralBoundInputs(kappa_L=1, lambda_eps=4, r_star_grad=0.25, psi_m=1, psi_m_perp=1, r_theta_perp=0.5)
    assert general_bound_case(inp) == 1
    assert general_bound(inp) == pytest.approx(4 / 16 + 4 * 0.5 / 4)
    zero = GeneralBoundInputs(kappa_L=1, lambda_eps=1e6, r_star_grad=0, psi_m=1, psi_m_perp=1, r_theta_perp=0)
    assert general_bound_case(zero) == 1


def test_general_bound_validation():
    with pytest.raises(InvalidConfigError):
        GeneralBoundInputs(kappa_L=0, lambda_eps=1, r_star_grad=1, psi_m=1, psi_m_perp=1, r_theta_perp=0)
    with pytest.raises(InvalidConfigError):
        GeneralBoundInputs(kappa_L=1, lambda_eps=1, r_star_grad=-1, psi_m=1, psi_m_perp=1, r_theta_perp=0)


def test_grad_bound_star_values():
    assert grad_bound_at_theta_star(450, 35, 0.0, 1.0, 0.001) == 0.0
    ref = math.sqrt(2 * CHI2_001[450] * LN2000) / 450
    assert grad_bound_at_theta_star(450, 35, 1.0, 1.0, 0.001) == pytest.approx(ref, rel=1e-10)


def test_grad_bound_hat_values():
    assert grad_bound_at_theta_hat(485, 35, 1.0, 1.0, 0.001, 0.0) == pytest.approx(
        grad_bound_at_theta_star(450, 35, 1.0, 1.0, 0.001) * 450 / 485, rel=1e-12)
    ref = math.sqrt(2 * 0.01 * CHI2_001[965] * 1.035 * LN2000) / 1000
    assert grad_bound_at_theta_hat(1000, 35, 0.01, 1.0, 0.001, 0.035) == pytest.approx(ref, rel=1e-10)
    with pytest.raises(DomainError):
        grad_bound_at_theta_hat(35, 35, 1.0, 1.0, 0.001, 0.1)


def test_grad_bound_hat_monotone():
    base = dict(N=1000, n=35, sigma_e2=0.01, s_max=1.0, beta=0.001, eps_N=0.035)
    v = grad_bound_at_theta_hat(**base)
    for key, bigger in (("eps_N", 0.07), ("sigma_e2", 0.02), ("s_max", 1.5)):
        assert grad_bound_at_theta_hat(**{**base, key: bigger}) > v


def _inputs(**kw):
    base = dict(n=35, n_eta=10, N=1000, sigma_e2=0.01, s_max=1.0, kappa_alpha=0.3, eps_N=0.035, beta=0.001,
                alpha=0.02, theta_tail_l1=0.05)
    base.update(kw)
    return SparseBoundInputs(**base)


def test_sparse_bound_spreadsheet_example():
    # the two displayed formulas evaluated by hand with oracle quantiles
    k, N = 0.3, 1000
    c_hat = 0.01 * 1.0 * CHI2_001[965] * 1.035 * LN2000
    c_star = 0.01 * 1.0 * CHI2_001[1000] * LN2000
    tail = math.sqrt(32 * c_hat) * 0.05 / (k * N)
    a1 = 8 * 10 * c_hat / (k * k * N * N) + tail
    a2 = (16 * 35 - 12 * 10) * c_star / (k * k * N * N) + tail
    res = sparse_bound(_inputs())
    assert res.a1 == pytest.approx(a1, rel=1e-10)
    assert res.a2 == pytest.approx(a2, rel=1e-10)
    assert res.bound == max(res.a1, res.a2)
    assert res.bound_l2 == pytest.approx(math.sqrt(res.bound))


def test_sparse_bound_exact_sparsity_reduction():
    res = sparse_bound(_inputs(n_eta=35, theta_tail_l1=0.0))
    c = 0.01 * LN2000 / (0.09 * 1e6)
    assert res.a1 == pytest.approx(8 * 35 * CHI2_001[965] * 1.035 * c, rel=1e-10)
    assert res.a2 == pytest.approx(4 * 35 * CHI2_001[1000] * c, rel=1e-10)


def test_sparse_bound_probability():
    assert sparse_bound(_inputs()).prob == pytest.approx(0.8428, abs=1e-12)
    with pytest.warns(RuntimeWarning):
        res = sparse_bound(_inputs(beta=0.01))
    assert res.vacuous and res.prob < 0


def test_sparse_bound_domain():
    with pytest.raises(DomainError):
        _inputs(N=35)
    with pytest.raises(InvalidConfigError):
        _inputs(n_eta=36)
    with pytest.raises(InvalidConfigError):
        _inputs(alpha=1.0)


@settings(max_examples=50, deadline=None)
@given(scale=st.floats(1.01, 10.0), key=st.sampled_from(["sigma_e2", "s_max", "theta_tail_l1"]))
def test_sparse_bound_increasing(scale, key):
    base = _inputs()
    bigger = _inputs(**{key: getattr(base, key) * scale})
    assert sparse_bound(bigger).bound >= sparse_bound(base).bound


@settings(max_examples=50, deadline=None)
@given(k=st.floats(0.01, 2.0), N=st.integers(200, 20_000), dk=st.floats(1.001, 3), dN=st.integers(1, 5000))
def test_sparse_bound_decreasing(k, N, dk, dN):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = sparse_bound(_inputs(kappa_alpha=k, N=N)).bound
        assert sparse_bound(_inputs(kappa_alpha=k * dk, N=N)).bound <= b
        assert sparse_bound(_inputs(kappa_alpha=k, N=N + dN)).bound <= b


def test_matches_general_bound_substitution(rng):
    for _ in range(20):
        n = int(rng.integers(2, 60))
        inp = _inputs(n=n, n_eta=int(rng.integers(1, n + 1)), N=int(n + rng.integers(1, 3000)),
                      sigma_e2=float(rng.uniform(0.001, 3)), s_max=float(rng.uniform(0.5, 2)),
                      kappa_alpha=float(rng.uniform(0.05, 1)), eps_N=float(rng.uniform(0.001, 0.5)),
                      theta_tail_l1=float(rng.uniform(0, 1)))
        res = sparse_bound(inp)
        g_star = grad_bound_at_theta_star(inp.N, inp.n, inp.sigma_e2, inp.s_max, inp.beta)
        g_hat = grad_bound_at_theta_hat(inp.N, inp.n, inp.sigma_e2, inp.s_max, inp.beta, inp.eps_N)
        lam = 1.0 / g_hat
        common = dict(kappa_L=inp.kappa_alpha, lambda_eps=lam, psi_m=math.sqrt(inp.n_eta),
                      psi_m_perp=math.sqrt(inp.n - inp.n_eta), r_theta_perp=inp.theta_tail_l1)
        # case 1 when the gradient term is switched off, case 2 when it dominates
        assert general_bound(GeneralBoundInputs(r_star_grad=0.0, **common)) == pytest.approx(res.a1, rel=1e-12)
        case2 = GeneralBoundInputs(r_star_grad=g_star, **common)
        if general_bound_case(case2) == 2:
            assert general_bound(case2) == pytest.approx(res.a2, rel=1e-12)


def test_tail_examples():
    assert weak_sparsity_tail([3, 0, 0, -1, 0], 2) == 0
    assert weak_sparsity_tail([1, 0.5, 0.25, 0.125], 2) == 0.375
    assert weak_sparsity_tail([-0.125, 1, 0.25, -0.5], 2) == 0.375


def test_tail_bound_dominates(rng):
    for _ in range(30):
        theta = rng.standard_normal(35) * 0.8 ** np.arange(35)
        r = float(np.sum(np.abs(theta) ** 0.5))
        for k in range(1, 36):
            assert weak_sparsity_tail(theta, k) <= weak_sparsity_tail_bound(0.5, r, k) * (1 + 1e-12)


def test_tail_bound_rejects_q_zero():
    with pytest.raises(DomainError):
        weak_sparsity_tail_bound(0.0, 3, 2)
    assert weak_sparsity_tail_bound(1.0, 2.5, 4) == 2.5
