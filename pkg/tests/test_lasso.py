import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfpdl import lasso
from sfpdl.errors import DegenerateFolds
from sfpdl.lasso import PenaltyPlan
from sfpdl.linalg import ols_solve


def problem(seed, n=60, k=8, signal=(1.5, -1.0, 0.5)):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n, k)) * rng.uniform(0.5, 3, k)
    beta = np.zeros(k)
    beta[: len(signal)] = signal
    y = 0.7 + W @ beta + rng.standard_normal(n)
    return W, y


def test_zero_penalty_is_ols():
    W, y = problem(1)
    fit = lasso.lasso_fit(W, y, 0.0, tol=1e-12)
    ols = ols_solve(np.column_stack([np.ones(len(y)), W]), y)
    np.testing.assert_allclose(np.r_[fit.intercept, fit.coefficients], ols.coefficients, atol=1e-8)


@pytest.mark.parametrize("standardize", [False, True])
def test_null_model_threshold(standardize):
    W, y = problem(2)
    mask = np.r_[False, False, np.ones(6, dtype=bool)]
    X1 = np.column_stack([np.ones(len(y)), W[:, :2]])
    resid = ols_solve(X1, y).residuals
    Zp = W[:, 2:] - X1 @ np.linalg.lstsq(X1, W[:, 2:], rcond=None)[0]
    scale = W[:, 2:].std(axis=0, ddof=1) if standardize else np.ones(6)
    top = np.max((2 / len(y)) * np.abs(Zp.T @ resid) / scale)
    fit = lasso.lasso_fit(W, y, top * (1 + 1e-9), mask, standardize)
    assert fit.support == ()
    np.testing.assert_allclose(np.r_[fit.intercept, fit.coefficients[:2]], ols_solve(X1, y).coefficients, atol=1e-10)
    below = lasso.lasso_fit(W, y, top * 0.99, mask, standardize)
    assert len(below.support) == 1


def test_brute_force_scalar_oracle():
    rng = np.random.default_rng(3)
    W = rng.standard_normal((8, 3))
    y = 1 + W @ [0.5, -0.4, 0.8] + 0.3 * rng.standard_normal(8)
    mask = np.array([False, False, True])
    level = 0.2
    fit = lasso.lasso_fit(W, y, level, mask, standardize=True, tol=1e-14)
    B = np.column_stack([np.ones(8), W[:, :2]])
    q, _ = np.linalg.qr(B)
    yt = y - q @ (q.T @ y)
    wt = W[:, 2] - q @ (q.T @ W[:, 2])
    sd = W[:, 2].std(ddof=1)
    t = np.arange(-3, 3, 1e-5)
    obj = (yt @ yt - 2 * t * (wt @ yt) + t ** 2 * (wt @ wt)) / 8 + level * sd * np.abs(t)
    assert fit.coefficients[2] == pytest.approx(t[np.argmin(obj)], abs=1e-4)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["fixed", "cvmin", "cv1se", "plugin"]), st.booleans())
def test_kkt_holds_on_every_fit(seed, rule, partial):
    W, y = problem(seed, n=50, k=12)
    mask = np.r_[np.zeros(3, dtype=bool), np.ones(9, dtype=bool)] if partial else None
    plan = PenaltyPlan(mask=mask, rule=rule, level=0.05 if rule == "fixed" else None, folds=5, n_levels=30,
                       seed=seed)
    fit = lasso.fit(W, y, plan)
    assert lasso.kkt_violation(fit, W, y) < 1e-6
    expected = {j for j in range(12) if (mask is None or mask[j]) and fit.coefficients[j] != 0}
    assert set(fit.support) == expected


def test_warm_path_equals_cold_start():
    W, y = problem(4, n=80, k=15)
    plan = PenaltyPlan(rule="fixed", level=1.0, n_levels=25)
    path = lasso.lasso_path(W, y, plan)
    for f in path[::4]:
        cold = lasso.lasso_fit(W, y, f.penalty_level)
        np.testing.assert_allclose(f.coefficients, cold.coefficients, atol=1e-6)
    levels = [f.penalty_level for f in path]
    assert np.all(np.diff(levels) < 0)


def test_objective_never_increases():
    W, y = problem(5, n=40, k=30)
    trace = lasso.objective_trace(W, y, 0.05, sweeps=40)
    assert np.all(np.diff(trace) <= 1e-12 * trace[0])


def test_select_from_curve_rules():
    levels = np.geomspace(1, 0.01, 10)
    increasing = np.column_stack([levels, levels + 1.0, np.full(10, 0.01)])
    res = lasso.select_from_curve(increasing)
    assert res.level_min == levels.min() and res.level_1se >= res.level_min
    flat = np.column_stack([levels, np.ones(10), np.full(10, 0.1)])
    res = lasso.select_from_curve(flat)
    assert res.level_1se == levels.max() and res.level_min == levels.max()


def test_cv_matches_independent_fold_loop():
    W, y = problem(6, n=200, k=20)
    grid = np.geomspace(0.5, 0.005, 15)
    plan = PenaltyPlan(rule="cv1se", grid=grid, folds=10, seed=42, cv_tol=1e-12, tol=1e-12)
    ours = lasso.cv_select(W, y, plan)
    perm = np.random.default_rng(42).permutation(200)
    blocks = np.array_split(perm, 10)
    errs = np.empty((15, 10))
    for f, test in enumerate(blocks):
        train = np.setdiff1d(np.arange(200), test)
        for i, level in enumerate(grid):
            fit = lasso.lasso_fit(W[train], y[train], level, tol=1e-13)
            errs[i, f] = np.mean((y[test] - fit.predict(W[test])) ** 2)
    mean, se = errs.mean(axis=1), errs.std(axis=1, ddof=1) / math.sqrt(10)
    np.testing.assert_allclose(ours.curve[:, 1], mean, rtol=1e-8)
    i_min = int(np.argmin(mean))
    oracle_1se = grid[mean <= mean[i_min] + se[i_min]].max()
    assert ours.level_min == grid[i_min]
    assert ours.level_1se == oracle_1se


def test_degenerate_folds():
    W, y = problem(7, n=30, k=4)
    W[:, 0] = 0.0
    W[3, 0] = 1.0
    plan = PenaltyPlan(mask=np.array([False, True, True, True]), folds=5)
    with pytest.raises(DegenerateFolds):
        lasso.cv_select(W, y, plan)


def test_plugin_quantile_oracle():
    mpmath.mp.dps = 40
    alpha = mpmath.mpf("0.1") / mpmath.log(100)
    q = mpmath.sqrt(2) * mpmath.erfinv(1 - alpha)  # Phi^{-1}(1 - alpha/2)
    expected = float(2 * mpmath.mpf("1.1") * 10 * q)
    assert lasso.plugin_lambda(100, 1, 1.0) == pytest.approx(expected, rel=1e-12)


def test_plugin_monotone_in_d_and_zero_noise():
    levels = [lasso.plugin_lambda(200, d, 1.0) for d in (1, 5, 50, 500)]
    assert np.all(np.diff(levels) > 0)
    rng = np.random.default_rng(9)
    W = rng.standard_normal((50, 4))
    y = 2 + 3 * W[:, 0]
    plan = PenaltyPlan(mask=np.array([False, True, True, True]), rule="plugin")
    assert lasso.plugin_lambda(50, 3, 0.0) == 0.0
    assert lasso.plugin_penalty(W, y, plan) < 1e-12


def test_unnormalized_level():
    W, y = problem(8)
    fit = lasso.lasso_fit(W, y, 0.1)
    assert fit.level_unnormalized == pytest.approx(0.1 * len(y))


def test_plan_validation():
    with pytest.raises(ValueError):
        PenaltyPlan(rule="bogus")
    with pytest.raises(ValueError):
        PenaltyPlan(rule="fixed")
    with pytest.raises(ValueError):
        PenaltyPlan(grid=np.array([0.1, 0.2]))
