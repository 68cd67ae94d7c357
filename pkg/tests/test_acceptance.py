"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION k: PASS|FAIL`` line (repeated in the
terminal summary) and then asserts the same condition.
"""
import math
import os
import warnings

import numpy as np
import pytest

from sfpdl import lasso
from sfpdl import selectors
from sfpdl.cli import run_estimate
from sfpdl.cols import SigmaVFloored, cols_fit
from sfpdl.distributions import composite_moments, gaussian_loglik, loglik, pack_theta
from sfpdl.frontier import CompositeErrorParams, Dataset
from sfpdl.linalg import ols_solve, partial_out
from sfpdl.mle import mle_fit
from sfpdl.montecarlo import McDesign, gen_belloni_d1, gen_irrelevant_z, run_design, standardized_dist
from sfpdl.ortho import OrthoDGP, full_report, ortho_sample

RESULTS = []
WORKERS = os.cpu_count() or 1


def report(k, passed, detail):
    line = f"CRITERION {k}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert passed, line


def ols_cell(n, c, reps):
    return run_design(McDesign("irrelevant_z", n, c, reps, 0, ("OLS",), workers=WORKERS))


@pytest.fixture(scope="module")
def belloni():
    chains = ("PSL-COLS", "PDL-COLS", "PSL-MLE", "PDL-MLE")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SigmaVFloored)
        return run_design(McDesign("belloni_d1", 100, 0.0, 2000, 0, chains, workers=WORKERS))


def test_criterion_1_ols_skewness_c0():
    s = ols_cell(400, 0.0, 1000)
    m = s.mean("OLS", "skewness")
    report(1, abs(m - (-0.536)) <= 0.03, f"mean OLS skewness n=400 c=0: {m:.4f} (target -0.536 +/- 0.03)")


def test_criterion_2_ols_skewness_c09():
    s = ols_cell(400, 0.9, 1000)
    m = s.mean("OLS", "skewness")
    report(2, abs(m - (-0.012)) <= 0.02, f"mean OLS skewness n=400 c=0.9: {m:.4f} (target -0.012 +/- 0.02)")


def test_criterion_3_wrong_skew_counts():
    a = ols_cell(400, 0.9, 1000).count("OLS", "wrong_skew")
    b = ols_cell(1600, 0.5, 1000).count("OLS", "wrong_skew")
    ok = abs(a - 459) <= 50 and b <= 2
    report(3, ok, f"wrong skew n=400 c=0.9: {a}/1000 (target 459 +/- 50); n=1600 c=0.5: {b}/1000 (allow <= 2)")


# reduced replications for the wide LASSO rows; the allowance scales with reps
TABLE4_REPS = {400: 100, 800: 50, 1600: 20}
TABLE_C = (0.0, 0.01, 0.1, 0.2, 0.3, 0.5, 0.9)


def test_criterion_4_lasso_tables():
    main = run_design(McDesign("irrelevant_z", 400, 0.9, 1000, 0, ("LASSO-FULL",), workers=WORKERS))
    m = main.mean("LASSO-FULL", "skewness")
    partial = run_design(McDesign("irrelevant_z", 400, 0.9, 200, 0, ("LASSO",), workers=WORKERS))
    print(f"info: inputs-unpenalised LASSO n=400 c=0.9, 200 reps: mean skewness "
          f"{partial.mean('LASSO', 'skewness'):.4f}")
    worst = []
    for n, reps in TABLE4_REPS.items():
        for c in TABLE_C:
            s = run_design(McDesign("irrelevant_z", n, c, reps, 1, ("LASSO-FULL",), workers=WORKERS))
            k = s.count("LASSO-FULL", "wrong_skew")
            if k > 2 * reps / 1000:
                worst.append(f"n={n} c={c:g}: {k}/{reps}")
    a = main.count("LASSO-FULL", "wrong_skew")
    if a > 2:
        worst.append(f"n=400 c=0.9: {a}/1000")
    ok = abs(m - (-0.455)) <= 0.03 and not worst
    reps_text = ", ".join(f"n={n}: {r} reps" for n, r in TABLE4_REPS.items())
    report(4, ok, f"LASSO(1se) skewness n=400 c=0.9: {m:.4f} (target -0.455 +/- 0.03); "
                  f"wrong skew rows n>=400 ({reps_text}, allowance 2 per 1000): "
                  f"{'all zero' if not worst else '; '.join(worst)}")


def test_criterion_5_belloni_wrong_skew(belloni):
    psl = belloni.count("PSL-COLS", "wrong_skew")
    pdl = belloni.count("PDL-COLS", "wrong_skew")
    ok = abs(psl - 48) <= 20 and abs(pdl - 14) <= 20 and psl > pdl
    report(5, ok, f"wrong skew of 2000: PSL-COLS {psl} (target 48 +/- 20), PDL-COLS {pdl} (target 14 +/- 20)")


def test_criterion_6_standardized_distributions(belloni):
    d = {e: standardized_dist(belloni.records, e, 1.0)
         for e in ("PSL-COLS", "PDL-COLS", "PSL-MLE", "PDL-MLE")}
    parts, ok = [], True
    for stage in ("COLS", "MLE"):
        pdl, psl = d[f"PDL-{stage}"], d[f"PSL-{stage}"]
        good = abs(pdl.mean) < 0.15 and 0.8 <= pdl.sd <= 1.2 and abs(psl.mean) > 2 * abs(pdl.mean)
        ok &= good
        parts.append(f"{stage}: PDL mean {pdl.mean:.3f} sd {pdl.sd:.3f}, PSL mean {psl.mean:.3f}")
    e_psl = belloni.count("PSL-MLE", "eff_one")
    e_pdl = belloni.count("PDL-MLE", "eff_one")
    ok &= e_psl > e_pdl
    parts.append(f"mean eff ~ 1: PSL-MLE {e_psl}, PDL-MLE {e_pdl}")
    report(6, ok, "; ".join(parts))


def test_criterion_7_closed_form_skewness():
    s = composite_moments(CompositeErrorParams.from_std(1.2, 0.5)).skewness
    report(7, abs(s - (-0.554)) <= 0.001, f"skewness(1.2, 0.5) = {s:.5f} (target -0.554 +/- 0.001)")


def _positive_skew_data(n=500):
    for seed in range(200):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, 2))
        y = 1 + X @ [0.4, 0.6] + rng.standard_normal(n)
        e = ols_solve(np.column_stack([np.ones(n), X]), y).residuals
        if np.sum(e ** 3) > 0:
            return Dataset.from_arrays(y, X)
    raise AssertionError("no positively skewed seed")


def test_criterion_8_property_suite(monkeypatch):
    checks = {}
    # KKT on every LASSO fit produced by the selectors and the simulation chains
    seen = []
    original = lasso.fit

    def recording(W, y, plan):
        f = original(W, y, plan)
        seen.append(lasso.kkt_violation(f, W, y))
        return f

    monkeypatch.setattr(lasso, "fit", recording)
    data = gen_belloni_d1(100, seed=3)
    for rule in ("plugin", "cv1se", "cvmin"):
        plan = lasso.PenaltyPlan(rule=rule, seed=3)
        selectors.select(data, "psl", plan)
        selectors.select(data, "pdl", plan)
    W, mask = lasso.dataset_design(data)
    for f in lasso.lasso_path(W, data.y, lasso.PenaltyPlan(mask=mask, n_levels=40)):
        seen.append(lasso.kkt_violation(f, W, data.y))
    checks["kkt"] = (max(seen) < 1e-6, f"KKT max {max(seen):.1e} over {len(seen)} fits")

    # analytic gradient against central differences
    small = gen_irrelevant_z(200, 0.0, seed=5)
    theta = pack_theta([0.9, 0.3, 0.4, 0.38], 1.6, 0.8)
    ev = loglik(theta, small)
    rel = 0.0
    for j in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[j] += 1e-6
        tm[j] -= 1e-6
        fd = (loglik(tp, small).value - loglik(tm, small).value) / 2e-6
        rel = max(rel, abs(fd - ev.grad[j]) / max(1.0, abs(fd)))
    checks["gradient"] = (rel < 1e-6, f"gradient rel err {rel:.1e}")

    # boundary: the kernel without the constant 2 plus n ln 2 is the Gaussian OLS loglik
    pos = _positive_skew_data()
    mf = mle_fit(pos)
    g = gaussian_loglik(ols_solve(pos.design().values, pos.y).residuals)
    kernel = mf.loglik - pos.n * math.log(2.0)
    gap = abs(kernel + pos.n * math.log(2.0) - g)
    checks["waldman"] = (mf.boundary_solution and gap < 1e-8, f"boundary gap {gap:.1e}")

    # Frisch-Waugh
    rng = np.random.default_rng(8)
    X = np.column_stack([np.ones(80), rng.standard_normal((80, 3))])
    w = rng.standard_normal(80) + X[:, 1]
    y = rng.standard_normal(80) + 0.7 * w + X @ [1, 0.2, 0.3, 0.4]
    full = ols_solve(np.column_stack([X, w]), y).coefficients[-1]
    fw = ols_solve(partial_out(w, X), partial_out(y, X)).coefficients[0]
    checks["fwl"] = (abs(full - fw) < 1e-10, f"FWL gap {abs(full - fw):.1e}")

    # COLS moment identity
    cf = cols_fit(gen_irrelevant_z(400, 0.1, seed=6), None)
    lhs = cf.sigma.sigma_v_sq + (math.pi - 2) / math.pi * cf.sigma.sigma_u_sq
    gap = abs(lhs - cf.mu2) / cf.mu2
    checks["cols"] = (gap < 1e-12, f"COLS identity rel gap {gap:.1e}")

    report(8, all(v[0] for v in checks.values()), "; ".join(v[1] for v in checks.values()))


def test_criterion_9_orthogonality():
    rep = full_report(ortho_sample(1_000_000, OrthoDGP(), seed=0))
    bad = [f"{m}/{nu}" for m in ("Astar_cols", "Astar_mle") for nu in ("delta", "pi_x", "pi_y")
           if rep.get(m, nu).verdict != "orthogonal"]
    app = rep.get("Adoubleprime", "pi_x")
    rho = rep.get("rho_condition", "demeaned")
    ok = not bad and app.estimate.z() > 5 and rho.verdict == "orthogonal"
    report(9, ok, f"A* non-orthogonal entries: {bad or 'none'}; A'' pi_x |z| = {app.estimate.z():.1f} "
                  f"(needs > 5); rho condition |z| = {rho.estimate.z():.2f} ({rho.verdict})")


def test_criterion_10_synthetic_dairy(tmp_path):
    from sfpdl import io as sio
    from sfpdl.montecarlo import gen_dairy_like

    def fixture(name, positive):
        cols, roles = gen_dairy_like(600, seed=11, positive_skew=positive)
        sio.write_csv(tmp_path / f"{name}.csv", cols)
        sio.write_schema(tmp_path / f"{name}_schema.csv", roles)
        return {"input": str(tmp_path / f"{name}.csv"), "schema": str(tmp_path / f"{name}_schema.csv")}

    base = {"method": "cols", "selector": "pdl", "penalty": "plugin", "cross_fit": "false", "compare": "true",
            "form": "cobb-douglas", "second_order_optional": "false", "efficiency": "jlms", "seed": "0",
            "folds": "10", "out": str(tmp_path / "cmp.csv")}
    reports = run_estimate({**base, **fixture("plain", False)}, stdout=open(os.devnull, "w"))
    chains = [r.chain for r in reports]
    pdl = [r.num_z for r in reports if r.chain.startswith("PDL")]
    skewed = run_estimate({**base, **fixture("skewed", True), "out": str(tmp_path / "cmp2.csv")},
                          stdout=open(os.devnull, "w"))
    allz = [r for r in skewed if r.chain == "All-Z-COLS"][0]
    ok = (len(reports) == 8 and all(0 < k < 51 for k in pdl)
          and allz.wrong_skew and sio.fmt3(allz.mean_eff) == "1.000")
    report(10, ok, f"chains {chains}; PDL Num Z {pdl} of 51; All-Z-COLS on positive-skew fixture: "
                   f"Mean Eff {sio.fmt3(allz.mean_eff)}, wrong skew {allz.wrong_skew}")
