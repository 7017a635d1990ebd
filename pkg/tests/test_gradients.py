import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hgrkb import finite_diff_check, hgr_kb, hgr_kb_subgradient, hgr_sk, hgr_sk_gradient, pearson
from hgrkb.gradients import GradientResult, hinge_gradient, numeric_gradient, pearson_gradient


def closed_form_pearson_gradient(a, b):
    """d rho / d b_i = (1/n) [ za_i - rho zb_i ] / sigma_b, written from scratch."""
    n = a.size
    za = (a - a.mean()) / a.std()
    zb = (b - b.mean()) / b.std()
    rho = np.mean(za * zb)
    return (za - rho * zb) / (n * b.std())


def _instance(seed, n=50):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=n)
    b = np.tanh(2 * a) + 0.4 * a**2 + 0.5 * rng.normal(size=n)
    return a, (b - b.mean()) / b.std()


def test_identical_vectors_have_zero_gradient(rng):
    a = rng.normal(size=40)
    g = hgr_kb_subgradient(a, a.copy(), (1, 1))
    assert g.value == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(g.gradient)) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_kb_gradient_matches_resolved_finite_differences(seed):
    a, b = _instance(seed)
    g = hgr_kb_subgradient(a, b, (3, 3))
    err = finite_diff_check(lambda x: hgr_kb(a, x, (3, 3)).value, g.gradient, b, step=1e-5)
    assert err <= 1e-3
    assert len(g.frozen_coefficients) == 2


@pytest.mark.parametrize("seed", range(5))
def test_sk_gradient_matches_resolved_finite_differences(seed):
    a, b = _instance(seed)
    g = hgr_sk_gradient(a, b, 3)
    err = finite_diff_check(lambda x: hgr_sk(a, x, 3).value, g.gradient, b, step=1e-5)
    assert err <= 1e-3


def test_sk_b_to_a_branch_gradient(rng):
    b = rng.normal(size=50)
    a = b**2 + 0.1 * rng.normal(size=50)
    res = hgr_sk(a, b, 3)
    assert res.direction == "b_to_a"
    g = hgr_sk_gradient(a, b, 3, result=res)
    assert finite_diff_check(lambda x: hgr_sk(a, x, 3).value, g.gradient, b, step=1e-5) <= 1e-3


def test_scaling_b_halves_gradient():
    a, b = _instance(11)
    g1 = hgr_kb_subgradient(a, b, (3, 3)).gradient
    g2 = hgr_kb_subgradient(a, 2 * b, (3, 3)).gradient
    np.testing.assert_allclose(g2, g1 / 2, atol=1e-6)


def test_sk_degree_one_is_pearson_gradient(rng):
    a = rng.normal(size=30)
    b = 0.5 * a + rng.normal(size=30)
    g = hgr_sk_gradient(a, b, 1)
    expected = np.sign(pearson(a, b)) * closed_form_pearson_gradient(a, b)
    np.testing.assert_allclose(g.gradient, expected, atol=1e-8)


def test_pearson_gradient_against_closed_form(rng):
    a, b = rng.normal(size=25), rng.normal(size=25)
    np.testing.assert_allclose(pearson_gradient(a, b), closed_form_pearson_gradient(a, b), atol=1e-14)
    err = finite_diff_check(lambda x: pearson(a, x), closed_form_pearson_gradient(a, b), b, step=1e-6)
    assert err <= 1e-6


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
@settings(max_examples=20)
def test_gradients_orthogonal_to_ones(seed, h, k):
    a, b = _instance(seed, n=30)
    assert abs(hgr_kb_subgradient(a, b, (h, k)).gradient.sum()) <= 1e-8
    assert abs(hgr_sk_gradient(a, b, h).gradient.sum()) <= 1e-8


def test_finite_diff_check_constant_function():
    b = np.arange(5.0)
    assert finite_diff_check(lambda x: 3.0, np.zeros(5), b) == 0.0
    with pytest.raises(ValueError):
        finite_diff_check(lambda x: 3.0, np.zeros(5), b, step=0)


def test_finite_diff_check_accepts_callable():
    b = np.array([1.0, 2.0, 3.0])
    assert finite_diff_check(lambda x: float(x @ x), lambda x: 2 * x, b) <= 1e-8


def test_numeric_gradient_leaves_input_untouched():
    b = np.array([1.0, 2.0])
    numeric_gradient(lambda x: float(x.sum()), b)
    np.testing.assert_array_equal(b, [1.0, 2.0])


def test_hinge_gradient_branches():
    grad = np.array([0.1, -0.2, 0.1])
    assert np.all(hinge_gradient(GradientResult(grad, 0.2, ()), tau=0.3) == 0.0)
    np.testing.assert_array_equal(hinge_gradient(GradientResult(grad, 0.5, ()), tau=0.3), grad)
    np.testing.assert_array_equal(hinge_gradient(GradientResult(grad, 0.3, ()), tau=0.3), grad)
