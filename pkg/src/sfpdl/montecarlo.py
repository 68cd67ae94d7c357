"""Simulation designs, replication scheduling and aggregation.

Two data-generating processes are provided:

* ``irrelevant_z``: three inputs, ``d = round(c n)`` covariates unrelated to
  output, composite error with ``sigma_v = 0.5`` and ``sigma_u = 1.2``.
* ``belloni_d1``: one input driven by 200 correlated covariates with
  quadratically decaying coefficients that also enter the frontier.

Replication ``r`` uses seed ``base_seed + r``; summaries are computed after
sorting by replication, so they do not depend on completion order.
"""
from __future__ import annotations

import csv
import functools
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cholesky, toeplitz

from . import lasso
from .cols import cols_fit
from .distributions import sample_skewness
from .errors import MissingSE, SfpdlError
from .frontier import Dataset
from .mle import MleOptions
from .selectors import cross_fit, estimate

IRRELEVANT_BETA = (1.0, 0.3, 0.4, 0.38)
KINDS = ("irrelevant_z", "belloni_d1")
# Estimator chains understood by run_design.
ESTIMATORS = (
    "OLS", "LASSO", "LASSO-FULL",
    "No-Z-COLS", "No-Z-MLE", "All-Z-COLS", "All-Z-MLE",
    "PSL-COLS", "PSL-MLE", "PDL-COLS", "PDL-MLE",
    "PSL-CF-COLS", "PSL-CF-MLE", "PDL-CF-COLS", "PDL-CF-MLE",
)
EFFICIENCY_ONE = 0.99  # mean efficiency above this counts as "no inefficiency found"


def gen_irrelevant_z(n: int, c: float, seed: int, sigma_v: float = 0.5, sigma_u: float = 1.2,
                     beta=IRRELEVANT_BETA) -> Dataset:
    """Frontier with three standard-Normal inputs and ``round(c n)`` irrelevant covariates."""
    if n < 10:
        raise ValueError(f"n must be at least 10, got {n}")
    if not 0 <= c < 1:
        raise ValueError(f"c must lie in [0, 1), got {c}")
    rng = np.random.default_rng(seed)
    d = int(round(c * n))
    X = rng.standard_normal((n, 3))
    Z = rng.standard_normal((n, d))
    v = rng.normal(0.0, sigma_v, n)
    u = np.abs(rng.normal(0.0, sigma_u, n))
    y = beta[0] + X @ np.asarray(beta[1:]) + v - u
    return Dataset.from_arrays(y, X, Z)


@functools.lru_cache(maxsize=8)
def _toeplitz_factor(d: int, rho: float) -> np.ndarray:
    return cholesky(toeplitz(rho ** np.arange(d)), lower=True)


def belloni_delta(d: int = 200) -> np.ndarray:
    return 1.0 / np.arange(1, d + 1) ** 2


def belloni_x_r2(d: int = 200, c_x: float = 0.8, rho: float = 0.5) -> float:
    """Population R^2 of ``x`` on the covariates."""
    delta = belloni_delta(d)
    q = c_x ** 2 * float(delta @ toeplitz(rho ** np.arange(d)) @ delta)
    return q / (q + 1.0)


def gen_belloni_d1(n: int = 100, seed: int = 0, d: int = 200, c_x: float = 0.8, c_y: float = 0.6,
                   beta0: float = 1.0, beta: float = 1.0, sigma_v_sq: float = 0.5, sigma_u_sq: float = 1.2,
                   rho: float = 0.5) -> Dataset:
    """One input ``x`` confounded by correlated covariates ``z`` with ``delta_j = 1/j^2``."""
    if n < 10:
        raise ValueError(f"n must be at least 10, got {n}")
    rng = np.random.default_rng(seed)
    L = _toeplitz_factor(d, rho)
    Z = rng.standard_normal((n, d)) @ L.T
    signal = Z @ belloni_delta(d)
    x = c_x * signal + rng.standard_normal(n)
    v = rng.normal(0.0, math.sqrt(sigma_v_sq), n)
    u = np.abs(rng.normal(0.0, math.sqrt(sigma_u_sq), n))
    y = beta0 + beta * x + c_y * signal + v - u
    return Dataset.from_arrays(y, x[:, None], Z)


@dataclass
class McDesign:
    """One simulation cell.

    ``plan`` supplies the penalty rule for LASSO-based chains; when omitted,
    ``irrelevant_z`` uses ``cv1se`` and ``belloni_d1`` the plug-in level. The
    replication seed is also used for the cross-validation folds.
    """

    kind: str
    n: int
    c: float = 0.0
    reps: int = 1000
    base_seed: int = 0
    estimators: tuple = ("OLS",)
    d: int | None = None
    plan: lasso.PenaltyPlan | None = None
    mle_opts: MleOptions | None = None
    parameter: str = "x1"
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ValueError(f"unknown estimators {unknown}; choose from {ESTIMATORS}")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        self.estimators = tuple(self.estimators)

    @property
    def truth(self) -> float:
        return IRRELEVANT_BETA[1] if self.kind == "irrelevant_z" else 1.0

    def default_plan(self) -> lasso.PenaltyPlan:
        if self.plan is not None:
            return self.plan
        if self.kind == "irrelevant_z":
            return lasso.PenaltyPlan(rule="cv1se", cv_tol=1e-5, cv_patience=10)
        return lasso.PenaltyPlan(rule="plugin")

    def generate(self, rep: int) -> Dataset:
        seed = self.base_seed + rep
        if self.kind == "irrelevant_z":
            return gen_irrelevant_z(self.n, self.c, seed)
        return gen_belloni_d1(self.n, seed, d=200 if self.d is None else self.d)


@dataclass
class McSummary:
    design: McDesign
    cells: dict  # (estimator, statistic) -> {"mean", "mc_se", "count", "n_ok", "failures"}
    records: list = field(default_factory=list)

    def mean(self, estimator: str, statistic: str) -> float:
        return self.cells[(estimator, statistic)]["mean"]

    def count(self, estimator: str, statistic: str) -> int:
        return self.cells[(estimator, statistic)]["count"]

    def failures(self, estimator: str) -> int:
        return sum(1 for r in self.records if r["estimator"] == estimator and r["error"])

    def write_summary(self, path, header: dict | None = None) -> None:
        with open(path, "w", newline="") as fh:
            _write_header(fh, header)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["estimator", "statistic", "mean", "mc_se", "count", "n_ok", "failures"])
            for (est, stat), cell in sorted(self.cells.items()):
                w.writerow([est, stat, _fmt(cell["mean"]), _fmt(cell["mc_se"]), cell["count"], cell["n_ok"],
                            cell["failures"]])

    def write_records(self, path, header: dict | None = None) -> None:
        with open(path, "w", newline="") as fh:
            _write_header(fh, header)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rep", "seed", "estimator", "statistic", "value"])
            for r in self.records:
                for stat in STATISTICS:
                    if stat in r:
                        w.writerow([r["rep"], r["seed"], r["estimator"], stat, _fmt(r[stat], 6)])
                if r["error"]:
                    w.writerow([r["rep"], r["seed"], r["estimator"], "error", r["error"]])


STATISTICS = ("skewness", "wrong_skew", "estimate", "se", "mean_eff", "eff_one", "num_selected")


def _fmt(x, digits: int = 3) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or not np.isfinite(x):
        return "nan"
    return f"{x:.{digits}f}"


def _write_header(fh, header: dict | None) -> None:
    for key, value in (header or {}).items():
        fh.write(f"# {key}: {value}\n")


def _lasso_stats(data: Dataset, plan: lasso.PenaltyPlan, penalize_inputs: bool) -> dict:
    W, mask = lasso.dataset_design(data)
    if penalize_inputs:
        mask = np.ones_like(mask)
    fit = lasso.fit(W, data.y, plan.with_mask(mask))
    e = fit.residuals(W, data.y)
    c = e - e.mean()
    return {"skewness": sample_skewness(e), "wrong_skew": bool(np.sum(c ** 3) > 0),
            "num_selected": len([j for j in fit.support if j >= data.p])}


def _chain_stats(data: Dataset, chain: str, plan, design: McDesign) -> dict:
    parts = chain.split("-")
    stage2 = parts[-1].lower()
    selector = "-".join(parts[:-1])
    if "CF" in parts:
        sel = parts[0].lower()
        fit = cross_fit(data, plan, stage2, sel, seed=plan.seed, mle_opts=design.mle_opts)
    else:
        sel = {"No-Z": "none", "All-Z": "all"}.get(selector, selector.lower())
        fit = estimate(data, sel, stage2, plan, design.mle_opts)
    mean_eff = fit.mean_efficiency
    return {
        "skewness": sample_skewness(fit.residuals),
        "wrong_skew": bool(fit.wrong_skew),
        "estimate": fit.coef(design.parameter),
        "se": fit.se(design.parameter),
        "mean_eff": mean_eff,
        "eff_one": bool(mean_eff > EFFICIENCY_ONE),
        "num_selected": fit.num_selected,
    }


def run_replication(design: McDesign, rep: int) -> list[dict]:
    """All estimator chains on replication ``rep``; failures are recorded, not raised."""
    seed = design.base_seed + rep
    data = design.generate(rep)
    plan = replace(design.default_plan(), seed=seed)
    out = []
    for est in design.estimators:
        rec = {"rep": rep, "seed": seed, "estimator": est, "error": ""}
        try:
            if est == "OLS":
                cf = cols_fit(data, None)
                rec.update(skewness=cf.raw_skewness, wrong_skew=cf.wrong_skew)
            elif est.startswith("LASSO"):
                rec.update(_lasso_stats(data, plan, est == "LASSO-FULL"))
            else:
                rec.update(_chain_stats(data, est, plan, design))
        except (SfpdlError, np.linalg.LinAlgError, ValueError) as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
        out.append(rec)
    return out


def summarize(design: McDesign, records: list[dict]) -> McSummary:
    records = sorted(records, key=lambda r: (r["rep"], design.estimators.index(r["estimator"])))
    cells = {}
    for est in design.estimators:
        mine = [r for r in records if r["estimator"] == est]
        ok = [r for r in mine if not r["error"]]
        for stat in STATISTICS:
            vals = np.array([float(r[stat]) for r in ok if stat in r])
            if vals.size == 0 and ok:
                continue
            k = vals.size
            cells[(est, stat)] = {
                "mean": float(vals.mean()) if k else math.nan,
                "mc_se": float(vals.std(ddof=1) / math.sqrt(k)) if k > 1 else math.nan,
                "count": int(np.sum(vals)) if stat in ("wrong_skew", "eff_one") else k,
                "n_ok": k,
                "failures": len(mine) - len(ok),
            }
    return McSummary(design, cells, records)


def run_design(design: McDesign) -> McSummary:
    """Run every replication (in parallel when ``workers > 1``) and aggregate."""
    workers = design.workers or os.cpu_count() or 1
    if workers > 1 and design.reps > 1:
        from joblib import Parallel, delayed

        chunks = Parallel(n_jobs=workers)(delayed(run_replication)(design, r) for r in range(design.reps))
    else:
        chunks = [run_replication(design, r) for r in range(design.reps)]
    return summarize(design, [rec for chunk in chunks for rec in chunk])


def run_grid(design: McDesign, ns, cs) -> dict:
    """``run_design`` over every ``(n, c)`` cell; keys are ``(n, c)``."""
    return {(n, c): run_design(replace(design, n=n, c=c)) for n in ns for c in cs}


def grid_table(results: dict, estimator: str, statistic: str, use: str = "mean") -> tuple:
    """Rows by ``n``, columns by ``c``: ``(ns, cs, values)``."""
    ns = sorted({k[0] for k in results})
    cs = sorted({k[1] for k in results})
    vals = np.full((len(ns), len(cs)), np.nan)
    for (n, c), summ in results.items():
        cell = summ.cells.get((estimator, statistic))
        if cell is not None:
            vals[ns.index(n), cs.index(c)] = cell[use]
    return ns, cs, vals


@dataclass
class StandardizedDist:
    values: np.ndarray
    counts: np.ndarray
    edges: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def sd(self) -> float:
        return float(self.values.std(ddof=1)) if self.values.size > 1 else 0.0


def standardized_dist(records: list[dict], estimator: str, truth: float, bins=30) -> StandardizedDist:
    """``(estimate - truth) / se`` per successful replication, plus histogram bins."""
    vals = []
    for r in records:
        if r["estimator"] != estimator or r["error"]:
            continue
        se = r.get("se")
        if se is None or not np.isfinite(se) or se <= 0:
            raise MissingSE(f"replication {r['rep']} of {estimator} has no usable standard error")
        vals.append((r["estimate"] - truth) / se)
    vals = np.array(vals)
    counts, edges = np.histogram(vals, bins=bins)
    return StandardizedDist(vals, counts, edges)


# Group sizes of the selectable dummies (one base category omitted per group).
DAIRY_DUMMY_GROUPS = {"year": 12, "coop": 8, "zone": 5, "county": 18}
DAIRY_INPUTS = ("cows", "land", "labor", "feed", "other")


def gen_dairy_like(n: int = 600, seed: int = 0, positive_skew: bool = False):
    """Level data shaped like a dairy-farm panel: 1 output, 5 inputs, 51 selectables.

    The selectables are 8 continuous covariates and 43 dummies. Two continuous
    covariates shift output, one more drives the first input, and the
    dummies are irrelevant. With ``positive_skew`` the one-sided term enters
    with a plus sign, so residuals are skewed the wrong way.

    Returns ``(columns, roles)``: a name -> array mapping and a name -> role
    mapping with roles ``output | input | selectable | dummy``.
    """
    rng = np.random.default_rng(seed)
    cont = rng.standard_normal((n, 8))
    cols, roles = {}, {}
    logs = rng.normal(0.0, 0.5, (n, 5))
    logs[:, 0] += 0.6 * cont[:, 2]
    for k, name in enumerate(DAIRY_INPUTS):
        cols[name] = np.exp(2.0 + logs[:, k])
        roles[name] = "input"
    for j in range(8):
        name = f"w{j + 1}"
        cols[name] = cont[:, j]
        roles[name] = "selectable"
    for group, size in DAIRY_DUMMY_GROUPS.items():
        level = rng.integers(0, size + 1, n)
        for k in range(1, size + 1):
            name = f"{group}{k}"
            cols[name] = (level == k).astype(float)
            roles[name] = "dummy"
    beta = np.array([0.45, 0.1, 0.05, 0.3, 0.15])
    v = rng.normal(0.0, 0.15, n)
    u = np.abs(rng.normal(0.0, 0.3, n))
    centred = logs - logs.mean(axis=0)
    lny = 1.0 + centred @ beta + 0.3 * cont[:, 0] - 0.2 * cont[:, 1] + 0.1 * cont[:, 2] + v + (u if positive_skew else -u)
    out = {"milk": np.exp(lny)}
    out.update(cols)
    return out, {"milk": "output", **roles}
