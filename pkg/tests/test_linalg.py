import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfpdl.errors import DimensionMismatch, RankDeficient, ZeroVariance
from sfpdl.linalg import DesignMatrix, ols_solve, partial_out, standardize_columns, unstandardize


def test_intercept_only_mean():
    fit = ols_solve(np.ones((4, 1)), np.array([1.0, 2.0, 3.0, 4.0]))
    assert fit.coefficients[0] == pytest.approx(2.5)
    assert abs(fit.residuals.sum()) < 1e-12


def test_exact_fit_has_zero_residuals():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    fit = ols_solve(X, X @ np.array([2.0, -1.0]))
    np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-14)


def test_matches_explicit_normal_equations(rng):
    X = rng.standard_normal((50, 4))
    y = rng.standard_normal(50)
    oracle = np.linalg.inv(X.T @ X) @ X.T @ y
    fit = ols_solve(X, y)
    np.testing.assert_allclose(fit.coefficients, oracle, rtol=0, atol=1e-10)
    np.testing.assert_allclose(fit.xtx_inverse, np.linalg.inv(X.T @ X), atol=1e-10)
    np.testing.assert_allclose(fit.residuals + fit.fitted, y, atol=1e-14)


def test_residuals_orthogonal_to_columns(rng):
    X = rng.standard_normal((80, 5)) * [1, 10, 0.1, 100, 1]
    y = rng.standard_normal(80)
    e = ols_solve(X, y).residuals
    ratio = np.abs(X.T @ e) / (np.linalg.norm(X, axis=0) * np.linalg.norm(e) + 1e-300)
    assert ratio.max() < 1e-8


def test_errors():
    with pytest.raises(DimensionMismatch):
        ols_solve(np.ones((4, 1)), np.ones(3))
    X = np.column_stack([np.ones(5), np.arange(5.0), 2 * np.arange(5.0)])
    with pytest.raises(RankDeficient):
        ols_solve(X, np.arange(5.0))
    with pytest.raises(RankDeficient):
        ols_solve(np.ones((2, 2)), np.ones(2))


def test_partial_out_cases(rng):
    Z = rng.standard_normal((100, 3))
    t = rng.standard_normal(100)
    r = partial_out(t, Z)
    assert np.max(np.abs(Z.T @ r)) < 1e-8 * np.linalg.norm(t)
    np.testing.assert_allclose(partial_out(r, Z), r, atol=1e-10)
    np.testing.assert_allclose(partial_out(Z[:, 0], Z), 0.0, atol=1e-12)
    np.testing.assert_allclose(partial_out(r, Z), r, atol=1e-12)
    np.testing.assert_array_equal(partial_out(t, np.empty((100, 0))), t)


def test_frisch_waugh(rng):
    X = np.column_stack([np.ones(60), rng.standard_normal((60, 2))])
    w = rng.standard_normal(60) + X[:, 1]
    y = rng.standard_normal(60) + 0.5 * w
    full = ols_solve(np.column_stack([X, w]), y).coefficients[-1]
    fw = ols_solve(partial_out(w, X), partial_out(y, X)).coefficients[0]
    assert fw == pytest.approx(full, abs=1e-8)


def test_standardize_simple_column():
    S, means, scales = standardize_columns(DesignMatrix(np.array([1.0, 2.0, 3.0])))
    np.testing.assert_allclose(S.values[:, 0], [-1.0, 0.0, 1.0])
    assert means[0] == 2.0 and scales[0] == 1.0


def test_standardize_already_standard_and_intercept():
    col = np.array([-1.0, 0.0, 1.0])
    X = DesignMatrix(np.column_stack([np.ones(3), col]), ("(Intercept)", "a"), True)
    S, means, scales = standardize_columns(X)
    np.testing.assert_array_equal(S.values, X.values)
    np.testing.assert_array_equal(means, [0.0, 0.0])
    np.testing.assert_array_equal(scales, [1.0, 1.0])


def test_zero_variance_names_column():
    X = DesignMatrix(np.column_stack([np.arange(4.0), np.full(4, 3.0)]), ("a", "flat"))
    with pytest.raises(ZeroVariance) as info:
        standardize_columns(X)
    assert "flat" in str(info.value)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 30), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_standardize_round_trip(n, k, seed):
    X = DesignMatrix(np.random.default_rng(seed).standard_normal((n, k)) * 7 + 3)
    S, means, scales = standardize_columns(X)
    np.testing.assert_allclose(S.values.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(S.values.std(axis=0, ddof=1), 1.0, rtol=1e-12)
    np.testing.assert_allclose(unstandardize(S, means, scales).values, X.values, atol=1e-12)
