import subprocess
import sys
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from hgrkb import (
    DegreeConfig,
    InvalidDegree,
    LengthMismatch,
    RankDeficient,
    SolverConfig,
    ZeroVariance,
    degree_scan,
    hgr_kb,
    hgr_sk,
    pearson,
    pearson_lstsq,
)
from hgrkb.correlation import monotonicity_violations, multistart_kb
from hgrkb.datagen import SyntheticSpec, generate
from hgrkb.kernelspace import expand


def angle_oracle_22(a, b):
    """Brute-force max correlation for degree-(2,2) kernels.

    Correlation is scale invariant, so each coefficient pair is an angle on
    [0, pi); scan a grid then polish with Nelder-Mead.  Uses no linear algebra
    beyond elementwise products.
    """
    def kern(x):
        z = (x - x.mean()) / x.std()
        return z, z**2

    a1, a2 = kern(a)
    b1, b2 = kern(b)

    def corr(s, t):
        f = np.cos(s) * a1 + np.sin(s) * a2
        g = np.cos(t) * b1 + np.sin(t) * b2
        return abs(np.corrcoef(f, g)[0, 1])

    grid = np.linspace(0, np.pi, 91)
    best = max(((corr(s, t), s, t) for s in grid for t in grid))
    res = minimize(lambda p: -corr(*p), x0=best[1:], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13})
    return max(best[0], -res.fun)


# --- pearson ---------------------------------------------------------------

@pytest.mark.parametrize(
    "a, b, expected",
    [
        ([1, 2, 3], [2, 4, 6], 1.0),
        ([1, 2, 3], [6, 4, 2], -1.0),
        # centered: [-1,0,1].[-1,1,0] = 1, norms sqrt(2) each
        ([1, 2, 3], [1, 3, 2], 0.5),
        # centered: 4 * 0.75 = 3 over norm^2 5
        ([0, 1, 2, 3], [1, 0, 3, 2], 0.6),
    ],
)
def test_pearson_examples(a, b, expected):
    assert pearson(a, b) == pytest.approx(expected, abs=1e-12)
    assert pearson_lstsq(a, b) == pytest.approx(expected, abs=1e-12)


def test_pearson_errors():
    with pytest.raises(LengthMismatch):
        pearson([1, 2, 3], [1, 2, 3, 4])
    with pytest.raises(ZeroVariance):
        pearson([1, 2, 3], [5, 5, 5])


@given(st.integers(0, 2**32 - 1))
def test_pearson_lstsq_matches_direct(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=50)
    b = 0.3 * a + rng.standard_t(3, size=50)
    assert abs(pearson_lstsq(a, b) - pearson(a, b)) <= 1e-10
    assert pearson(a, b) == pytest.approx(pearson(b, a), abs=1e-15)
    assert pearson_lstsq(a, a) == pytest.approx(1.0, abs=1e-12)


# --- hgr_kb ----------------------------------------------------------------

def test_kb_degree_one_is_abs_pearson(rng):
    for _ in range(20):
        a = rng.normal(size=80)
        b = -0.5 * a + rng.normal(size=80)
        assert hgr_kb(a, b, (1, 1)).value == pytest.approx(abs(pearson(a, b)), abs=1e-8)


def test_kb_recovers_even_function():
    a = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    b = a**2
    assert abs(pearson(a, b)) < 1e-15
    assert hgr_kb(a, b, (2, 1)).value == pytest.approx(1.0, abs=1e-8)


def test_kb_circle_is_one():
    theta = 2 * np.pi * np.arange(64) / 64
    res = hgr_kb(np.cos(theta), np.sin(theta), (2, 2))
    assert res.value == pytest.approx(1.0, abs=1e-6)


def test_kb_result_invariants(rng):
    a = rng.normal(size=60)
    b = np.sin(2 * a) + 0.3 * rng.normal(size=60)
    res = hgr_kb(a, b, (3, 4))
    Ka, Kb = expand(a, 3), expand(b, 4)
    f, g = Ka.centered @ res.alpha, Kb.centered @ res.beta
    assert 0.0 <= res.value <= 1.0
    assert res.alpha.shape == (3,) and res.beta.shape == (4,)
    assert g.std() == pytest.approx(1.0, abs=1e-6)
    assert f.std() == pytest.approx(1.0, abs=1e-6)
    assert pearson(f, g) == pytest.approx(res.value, abs=1e-8)
    assert res.diagnostics["iterations"] == 0
    assert len(res.diagnostics["condition_numbers"]) == 2


def test_kb_matches_bruteforce_angle_oracle(rng):
    for _ in range(5):
        a = rng.normal(size=30)
        b = a**2 * rng.choice([0.0, 1.0]) + rng.normal(size=30)
        assert hgr_kb(a, b, (2, 2)).value == pytest.approx(angle_oracle_22(a, b), abs=1e-6)


def test_kb_matches_multistart_refinement(rng):
    a, b = rng.normal(size=30), rng.normal(size=30)
    eig = hgr_kb(a, b, (2, 2)).value
    oracle = multistart_kb(a, b, (2, 2), restarts=16).value
    assert abs(eig - oracle) <= 1e-3


def test_refine_path_agrees_with_eigen_path(rng):
    a = rng.normal(size=200)
    b = np.cos(a) + 0.2 * rng.normal(size=200)
    eig = hgr_kb(a, b, (3, 3))
    ref = hgr_kb(a, b, (3, 3), SolverConfig(method="refine", max_iter=5000, tol=1e-14))
    assert ref.value == pytest.approx(eig.value, abs=1e-5)
    assert ref.diagnostics["iterations"] > 0
    # warm start at the optimum converges immediately
    warm = SolverConfig(method="refine", warm_start=(eig.alpha, eig.beta))
    hot = hgr_kb(a, b, (3, 3), warm)
    assert hot.value == pytest.approx(eig.value, abs=1e-8)
    assert hot.diagnostics["iterations"] < 5


def test_kb_sign_and_normalization_conventions(rng):
    a = rng.normal(size=100)
    b = -a + 0.1 * rng.normal(size=100)
    res = hgr_kb(a, b, (1, 1))
    assert res.alpha[0] > 0
    assert res.value > 0.99


def test_kb_rank_deficient_binary_input_warns(rng):
    a = rng.integers(0, 2, size=50).astype(float)
    b = a + rng.normal(size=50)
    with pytest.warns(RankDeficient):
        res = hgr_kb(a, b, (3, 2))
    assert res.diagnostics["rank_deficient"]
    assert 0.0 <= res.value <= 1.0
    assert res.value >= abs(pearson(a, b)) - 1e-6


def test_kb_errors():
    with pytest.raises(LengthMismatch):
        hgr_kb([1, 2, 3, 4], [1, 2, 3], (1, 1))
    with pytest.raises(InvalidDegree):
        hgr_kb([1, 2, 3, 4], [4, 1, 2, 3], (4, 1))
    with pytest.raises(InvalidDegree):
        DegreeConfig(0, 2)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
@settings(max_examples=20)
def test_kb_symmetry(seed, h, k):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=40)
    b = a**2 + rng.normal(size=40)
    assert hgr_kb(a, b, (h, k)).value == pytest.approx(hgr_kb(b, a, (k, h)).value, abs=1e-8)


@given(
    st.integers(0, 2**32 - 1),
    st.floats(0.1, 10) | st.floats(-10, -0.1),
    st.floats(0.1, 10) | st.floats(-10, -0.1),
    st.floats(-5, 5),
    st.floats(-5, 5),
)
@settings(max_examples=20)
def test_kb_affine_invariance(seed, s1, s2, c1, c2):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=50)
    b = np.abs(a) + rng.normal(size=50)
    base = hgr_kb(a, b, (3, 3)).value
    assert hgr_kb(s1 * a + c1, s2 * b + c2, (3, 3)).value == pytest.approx(base, abs=1e-7)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10)
def test_single_level_residual_equals_one_minus_square(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=60)
    b = np.sin(a) + rng.normal(size=60)
    res = hgr_kb(a, b, (3, 3))
    f = expand(a, 3).centered @ res.alpha
    g = expand(b, 3).centered @ res.beta
    mse = np.mean((res.value * f - g) ** 2)
    assert mse == pytest.approx(1 - res.value**2, abs=1e-6)


def test_kb_bit_identical_across_processes():
    code = (
        "import numpy as np; from hgrkb import hgr_kb;"
        "r=np.random.default_rng(5); a=r.normal(size=100); b=a**2+r.normal(size=100);"
        "res=hgr_kb(a,b,(4,4)); print(res.value.hex(), res.alpha.tobytes().hex(), res.beta.tobytes().hex())"
    )
    outs = {subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout for _ in range(3)}
    assert len(outs) == 1


# --- hgr_sk ----------------------------------------------------------------

def test_sk_degree_one_is_abs_pearson(rng):
    for _ in range(20):
        a = rng.normal(size=80)
        b = -0.5 * a + rng.normal(size=80)
        assert hgr_sk(a, b, 1).value == pytest.approx(abs(pearson(a, b)), abs=1e-10)


def test_sk_functional_dependence_direction(rng):
    a = rng.normal(size=100)
    a = (a - a.mean()) / a.std()
    res = hgr_sk(a, a**3, 3)
    assert res.value >= 0.999
    assert res.direction == "a_to_b"
    res = hgr_sk(a**3, a, 3)
    assert res.direction == "b_to_a"


def test_sk_tie_prefers_a_to_b(rng):
    a = rng.normal(size=30)
    assert hgr_sk(a, 2 * a + 1, 2).direction == "a_to_b"


def test_sk_fails_on_circle_where_kb_succeeds():
    theta = 2 * np.pi * np.arange(64) / 64
    a, b = np.cos(theta), np.sin(theta)
    assert hgr_sk(a, b, 5).value <= hgr_kb(a, b, (2, 2)).value - 0.2


def test_sk_normalization(rng):
    a = rng.uniform(-1, 1, 80)
    b = a**2 + 0.1 * rng.normal(size=80)
    res = hgr_sk(a, b, 4)
    f = expand(a, 4).centered @ res.alpha
    assert f.std() == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_array_equal(res.beta, [1.0])
    assert pearson(f, b) == pytest.approx(res.value, abs=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
@settings(max_examples=50)
def test_sk_never_exceeds_kb(seed, d):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=60)
    b = rng.choice([np.sin, np.square, np.abs])(a) + rng.uniform(0.1, 2) * rng.normal(size=60)
    assert hgr_sk(a, b, d).value <= hgr_kb(a, b, (d, d)).value + 1e-6


def test_sk_interpolates_eight_points(rng):
    a = rng.permutation(8).astype(float) + rng.uniform(0, 0.5, 8)
    b = rng.normal(size=8)
    assert hgr_sk(a, b, 7).value >= 0.999


# --- range and scan ---------------------------------------------------------

@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 5))
@settings(max_examples=25)
def test_values_in_unit_interval(seed, h, k):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=20), rng.normal(size=20)
    for v in (hgr_kb(a, b, (h, k)).value, hgr_sk(a, b, h).value):
        assert 0.0 <= v <= 1.0


def test_degree_scan_grid_properties():
    a, b = generate(SyntheticSpec("quadratic", 1000, 0.1, 0))
    grid = degree_scan(a, b, 5, 5)
    assert grid.shape == (5, 5)
    assert grid[0, 0] == pytest.approx(abs(pearson(a, b)), abs=1e-8)
    assert monotonicity_violations(grid) == []
    assert grid[1, 0] - grid[0, 0] >= 0.5
    assert grid[2, 0] - grid[1, 0] <= 0.05


def test_degree_scan_refine_path_uses_warm_start(rng):
    a = rng.normal(size=100)
    b = a**2 + rng.normal(size=100)
    grid = degree_scan(a, b, 3, 3, SolverConfig(method="refine", max_iter=2000))
    ref = degree_scan(a, b, 3, 3)
    np.testing.assert_allclose(grid, ref, atol=1e-3)


def test_monotonicity_violation_detector():
    grid = np.array([[0.5, 0.6], [0.4, 0.7]])
    assert monotonicity_violations(grid) == [(1, 1, 2, 1)]
