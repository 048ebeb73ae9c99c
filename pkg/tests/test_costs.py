import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socopt.costs import (
    CostError,
    GlobalObjective,
    central_difference,
    curvature_on_set,
    custom_cost,
    estimate_mf,
    gradient_check,
    minimizer_oracle,
    quadratic_family,
)
from socopt.presets import (
    SCENARIO1_A,
    SCENARIO1_SHIFTS,
    SCENARIO2_CENTERS,
    SCENARIO3_C,
    SCENARIO3_LINEAR,
)


def test_quadratic_gradient_vanishes_at_shift(obj1):
    for cost, a in zip(obj1.costs, SCENARIO1_SHIFTS):
        np.testing.assert_allclose(cost.grad(np.asarray(a)), 0.0, atol=1e-14)


def test_identity_quadratic():
    (cost,) = quadratic_family([np.eye(3)], shifts=[np.zeros(3)])
    x = np.ones(3)
    assert cost.f(x) == pytest.approx(1.5)
    np.testing.assert_allclose(cost.grad(x), [1.0, 1.0, 1.0])


def test_lipschitz_is_top_eigenvalue(obj1):
    a2 = np.asarray(SCENARIO1_A[1])
    assert obj1.costs[1].global_lipschitz == pytest.approx(np.linalg.eigvalsh(a2)[-1])


def test_asymmetric_matrix_rejected():
    with pytest.raises(CostError, match="asymmetric"):
        quadratic_family([[[1.0, 0.5], [0.0, 1.0]]], shifts=[[0.0, 0.0]])


def test_indefinite_matrix_rejected_with_eigenvalues():
    with pytest.raises(CostError, match="indefinite.*-1"):
        quadratic_family([[[1.0, 0.0], [0.0, -1.0]]], shifts=[[0.0, 0.0]])


def test_quartic_gradient_at_center(obj2):
    for cost, b in zip(obj2.costs, SCENARIO2_CENTERS):
        np.testing.assert_allclose(cost.grad(np.asarray(b)), 0.0, atol=1e-14)


def test_quartic_gradient_unit_offset(obj2):
    cost = obj2.costs[0]
    b = cost.quartic_center
    x = b + np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(cost.grad(x), [4.0, 0.0, 0.0], atol=1e-14)
    fd = central_difference(cost.f, x, 1e-6)
    np.testing.assert_allclose(cost.grad(x), fd, atol=1e-5)


def test_quartic_centers_stored_verbatim(obj2):
    np.testing.assert_array_equal(obj2.costs[1].quartic_center, [2.5, 2.0, 3.0])


def test_quartic_not_globally_lipschitz(obj2):
    assert all(c.global_lipschitz is None for c in obj2.costs)


def test_gradient_check_quadratics(obj1, obj3):
    rng = np.random.default_rng(42)
    samples = rng.uniform(-5.0, 5.0, (100, 3))
    for cost in (*obj1.costs, *obj3.costs):
        assert gradient_check(cost, samples) <= 1e-6


def test_gradient_check_quartics(obj2):
    rng = np.random.default_rng(43)
    samples = rng.uniform(-5.0, 5.0, (100, 3))
    for cost in obj2.costs:
        assert gradient_check(cost, samples) <= 1e-5


def test_gradient_check_constant_cost():
    cost = custom_cost(lambda x: 3.0, lambda x: np.zeros_like(x), dimension=2)
    rng = np.random.default_rng(44)
    assert gradient_check(cost, rng.uniform(-5, 5, (20, 2))) == 0.0


@pytest.mark.filterwarnings("ignore:divide by zero")
def test_gradient_check_nonfinite_named():
    cost = custom_cost(lambda x: float(1.0 / x[0]), lambda x: np.array([-1.0 / x[0] ** 2]), dimension=1)
    with pytest.raises(CostError, match=r"non-finite.*\[0\.0\]"):
        gradient_check(cost, [np.array([0.0])])


def test_minimizer_linear_solve_matches_dense_oracle(obj3):
    res = minimizer_oracle(obj3)
    S = sum(np.asarray(C) for C in SCENARIO3_C)
    rhs = -sum(np.asarray(a) for a in SCENARIO3_LINEAR)
    np.testing.assert_allclose(res.x, np.linalg.solve(S, rhs), atol=1e-12)
    assert res.unique
    assert res.residual <= 1e-10


def test_minimizer_single_agent_center():
    obj = GlobalObjective(quadratic_family([np.eye(2)], shifts=[[3.0, -1.0]]))
    res = minimizer_oracle(obj)
    np.testing.assert_allclose(res.x, [3.0, -1.0], atol=1e-12)


def test_minimizer_quartic_descent(obj2):
    res = minimizer_oracle(obj2)
    assert res.method == "descent"
    assert np.linalg.norm(obj2.sum_grad(res.x)) <= 1e-8


def test_minimizer_singular_flagged(obj1):
    res = minimizer_oracle(obj1)
    assert not res.unique
    assert res.null_basis is not None
    assert res.residual <= 1e-10
    # the flat direction of these costs is the consensus direction in R^3
    b = res.null_basis[:, 0]
    np.testing.assert_allclose(np.abs(b), np.full(3, 1 / np.sqrt(3)), atol=1e-10)


def test_curvature_quadratic_radius_independent(obj3):
    c = obj3.costs[0]
    top = np.linalg.eigvalsh(np.asarray(SCENARIO3_C[0]))[-1]
    assert curvature_on_set(c, 1.0, np.zeros(3)) == pytest.approx(top)
    assert curvature_on_set(c, 100.0, np.ones(3)) == pytest.approx(top)


def test_curvature_quartic_unit_ball(obj2):
    c = obj2.costs[0]
    assert curvature_on_set(c, 1.0, c.quartic_center) == pytest.approx(12.0)


def test_curvature_quartic_degenerate_ball(obj2):
    c = obj2.costs[1]
    center = c.quartic_center + np.array([2.0, 0.0, 0.0])
    assert curvature_on_set(c, 0.0, center) == pytest.approx(12.0 * 4.0)


def test_estimate_mf_exact_singular(obj1):
    est = estimate_mf(obj1, np.zeros(3))
    S = sum(np.asarray(A) for A in SCENARIO1_A)
    assert est.exact
    assert est.value == pytest.approx(np.linalg.eigvalsh(S)[0], abs=1e-9)
    assert not est.satisfied  # the summed curvature is singular


def test_estimate_mf_identity():
    obj = GlobalObjective(quadratic_family([np.eye(3)], shifts=[np.zeros(3)]))
    est = estimate_mf(obj, np.zeros(3))
    assert est.exact and est.satisfied
    assert est.value == pytest.approx(1.0)


def test_estimate_mf_linear_cost_flagged():
    cost = custom_cost(lambda x: float(x.sum()), lambda x: np.ones_like(x), dimension=2)
    obj = GlobalObjective([cost, cost])
    rng = np.random.default_rng(5)
    est = estimate_mf(obj, np.zeros(2), rng.uniform(-5, 5, (50, 2)))
    assert est.value == pytest.approx(0.0, abs=1e-12)
    assert not est.satisfied


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_convexity_inequality_sampled(seed, obj1, obj2, obj3):
    rng = np.random.default_rng(seed)
    for cost in (*obj1.costs, *obj2.costs, *obj3.costs):
        x = rng.uniform(-10.0, 10.0, 3)
        z = rng.uniform(-10.0, 10.0, 3)
        assert float((cost.grad(x) - cost.grad(z)) @ (x - z)) >= -1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_quadratic_lipschitz_sampled(seed, obj3):
    rng = np.random.default_rng(seed)
    for cost in obj3.costs:
        x = rng.uniform(-10.0, 10.0, 3)
        z = rng.uniform(-10.0, 10.0, 3)
        lhs = np.linalg.norm(cost.grad(x) - cost.grad(z))
        assert lhs <= cost.global_lipschitz * np.linalg.norm(x - z) + 1e-10
