"""Partially penalised LASSO: coordinate descent, cross-validation, plug-in level.

Objective, on the original scale of the regressors::

    (1/n) ||y - b0 - W theta||^2 + level * sum_{j penalised} w_j |theta_j|

where ``w_j`` is the sample standard deviation of column ``j`` (``n - 1``
denominator) when ``standardize`` is on and 1 otherwise. The intercept and
every column with ``mask == False`` are unpenalised. Multiply ``level`` by
``n`` to get the penalty of the un-normalised ``||y - W theta||^2 + lam ||.||_1``
form (``LassoFit.level_unnormalized``).

Unpenalised columns are profiled out exactly: for fixed penalised
coefficients the unpenalised block is the least-squares fit of the partial
residual, so the problem reduces to a plain LASSO on data residualised
against ``[1, W_unpenalised]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.stats import norm

from ._cd import cd_solve, cd_sweep
from .errors import DegenerateFolds, DimensionMismatch, NoConvergence, RankDeficient
from .frontier import Dataset
from .linalg import _qr

RULES = ("fixed", "cvmin", "cv1se", "plugin")
OBJECTIVE = "(1/n)||y - b0 - W theta||^2 + level * sum_j w_j |theta_j| (penalised j)"


@dataclass
class PenaltyPlan:
    """How the penalty level is chosen and which coefficients it touches.

    ``mask`` flags penalised columns of the regressor matrix (the intercept is
    implicit and never penalised); ``None`` penalises every column.
    """

    mask: np.ndarray | None = None
    rule: str = "cv1se"
    level: float | None = None
    folds: int = 10
    n_levels: int = 100
    min_ratio: float | None = None
    grid: np.ndarray | None = None
    seed: int = 0
    standardize: bool = True
    tol: float = 1e-8
    cv_tol: float = 1e-6
    cv_patience: int | None = None
    max_sweeps: int = 100_000
    plugin_c: float = 1.1
    plugin_alpha: float | None = None
    plugin_iters: int = 5

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.rule == "fixed" and self.level is None:
            raise ValueError("the fixed rule needs a level")
        if self.grid is not None:
            g = np.asarray(self.grid, dtype=float)
            if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) >= 0) or np.any(g < 0):
                raise ValueError("grid must be non-empty, non-negative and strictly decreasing")
            self.grid = g

    def with_mask(self, mask) -> "PenaltyPlan":
        return replace(self, mask=None if mask is None else np.asarray(mask, dtype=bool))


@dataclass
class LassoFit:
    intercept: float
    coefficients: np.ndarray
    support: tuple
    penalty_level: float
    penalty_weights: np.ndarray
    mask: np.ndarray
    sweeps: int = 0
    cv_curve: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def level_unnormalized(self) -> float:
        return self.penalty_level * self.metadata.get("n", 1)

    def predict(self, W) -> np.ndarray:
        return self.intercept + np.asarray(W, dtype=float) @ self.coefficients

    def residuals(self, W, y) -> np.ndarray:
        return np.asarray(y, dtype=float) - self.predict(W)


@dataclass
class CvResult:
    level_min: float
    level_1se: float
    curve: np.ndarray  # rows: (level, mean error, se of mean error)


class _Problem:
    """Data residualised against the unpenalised block, penalised columns scaled."""

    def __init__(self, W, y, mask, standardize: bool):
        W = np.asarray(W, dtype=float)
        W = W[:, None] if W.ndim == 1 else W
        y = np.asarray(y, dtype=float).ravel()
        if W.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"len(y)={y.shape[0]} but W has {W.shape[0]} rows")
        n, k = W.shape
        mask = np.ones(k, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if mask.shape != (k,):
            raise DimensionMismatch(f"mask has {mask.shape[0]} entries for {k} columns")
        self.n, self.k, self.mask, self.y, self.W = n, k, mask, y, W
        self.pen = np.flatnonzero(mask)
        self.unpen = np.flatnonzero(~mask)
        base = np.column_stack([np.ones(n), W[:, self.unpen]])
        self.q, self.r = _qr(base)
        P = W[:, self.pen]
        self.yt = y - self.q @ (self.q.T @ y)
        Pt = P - self.q @ (self.q.T @ P)
        if standardize and n > 1:
            scales = P.std(axis=0, ddof=1)
        else:
            scales = np.ones(P.shape[1])
        usable = scales > 0
        self.weights = np.where(usable, scales, 1.0)
        A = np.where(usable, Pt / self.weights, 0.0)
        self.A = np.asfortranarray(A)
        colsq = (self.A ** 2).sum(axis=0)
        # numerically null after residualising: never enters
        colsq[colsq <= 1e-20 * max(1.0, colsq.max(initial=0.0))] = 0.0
        self.colsq = colsq
        self.ynorm = math.sqrt(float(self.yt @ self.yt) / n)

    @property
    def d(self) -> int:
        return self.pen.size

    def level_max(self) -> float:
        if self.d == 0:
            return 0.0
        g = (2.0 / self.n) * np.abs(self.A.T @ self.yt)
        return float(g[self.colsq > 0].max(initial=0.0))

    def grid(self, plan: PenaltyPlan) -> np.ndarray:
        if plan.grid is not None:
            return plan.grid
        top = self.level_max()
        if top <= 0:
            return np.zeros(1)
        ratio = plan.min_ratio
        if ratio is None:
            ratio = 1e-4 if self.n > self.k + 1 else 1e-2
        return np.geomspace(top, top * ratio, plan.n_levels)

    def solve(self, level: float, c: np.ndarray, r: np.ndarray, tol: float, max_sweeps: int) -> int:
        if self.d == 0:
            return 0
        thresh = 0.5 * self.n * level
        sweeps = cd_solve(self.A, self.colsq, r, c, thresh, tol * max(self.ynorm, 1e-300), max_sweeps)
        if sweeps < 0:
            raise NoConvergence(f"coordinate descent did not converge in {max_sweeps} sweeps at level {level:g}")
        return sweeps

    def start(self):
        return np.zeros(self.d), self.yt.copy()

    def assemble(self, level: float, c: np.ndarray, sweeps: int) -> LassoFit:
        b = c / self.weights
        coef = np.zeros(self.k)
        coef[self.pen] = b
        active = np.flatnonzero(c)
        partial = self.y - self.W[:, self.pen[active]] @ b[active]
        base = np.linalg.solve(self.r, self.q.T @ partial)
        coef[self.unpen] = base[1:]
        support = tuple(int(j) for j in self.pen[active])
        weights = np.zeros(self.k)
        weights[self.pen] = self.weights
        return LassoFit(float(base[0]), coef, support, float(level), weights, self.mask.copy(), sweeps,
                        metadata={"n": self.n, "objective": OBJECTIVE})


def lasso_path(W, y, plan: PenaltyPlan) -> list[LassoFit]:
    """Warm-started solutions along the plan's grid (decreasing levels)."""
    prob = _Problem(W, y, plan.mask, plan.standardize)
    return _path(prob, prob.grid(plan), plan.tol, plan.max_sweeps)


def _path(prob: _Problem, grid, tol, max_sweeps) -> list[LassoFit]:
    c, r = prob.start()
    fits = []
    for level in grid:
        sweeps = prob.solve(level, c, r, tol, max_sweeps)
        fits.append(prob.assemble(level, c, sweeps))
    return fits


def lasso_fit(W, y, level: float, mask=None, standardize: bool = True, tol: float = 1e-8,
              max_sweeps: int = 100_000) -> LassoFit:
    """Cold-start solution at one penalty level."""
    prob = _Problem(W, y, mask, standardize)
    c, r = prob.start()
    sweeps = prob.solve(level, c, r, tol, max_sweeps)
    return prob.assemble(level, c, sweeps)


def fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    """Fold label per row: a seeded permutation cut into contiguous blocks."""
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=int)
    for f, block in enumerate(np.array_split(perm, folds)):
        ids[block] = f
    return ids


def cv_curve(W, y, plan: PenaltyPlan, grid=None) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    W = W[:, None] if W.ndim == 1 else W
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    if not 2 <= plan.folds <= n:
        raise ValueError(f"need 2 <= folds <= n, got folds={plan.folds}, n={n}")
    if grid is None:
        grid = _Problem(W, y, plan.mask, plan.standardize).grid(plan)
    ids = fold_ids(n, plan.folds, plan.seed)
    folds = []
    for f in range(plan.folds):
        train, test = ids != f, ids == f
        try:
            prob = _Problem(W[train], y[train], plan.mask, plan.standardize)
        except RankDeficient as exc:
            raise DegenerateFolds(f"fold {f}: unpenalised block loses full rank ({exc})") from None
        folds.append((prob, *prob.start(), W[test], y[test]))
    rows = []
    best = (math.inf, 0.0)
    outside = 0
    for level in grid:
        errs = np.empty(plan.folds)
        for f, (prob, c, r, Wt, yt) in enumerate(folds):
            prob.solve(level, c, r, plan.cv_tol, plan.max_sweeps)
            errs[f] = np.mean((yt - prob.assemble(level, c, 0).predict(Wt)) ** 2)
        mean, se = errs.mean(), errs.std(ddof=1) / math.sqrt(plan.folds)
        rows.append((level, mean, se))
        if mean < best[0]:
            best = (mean, se)
        outside = outside + 1 if mean > best[0] + best[1] else 0
        if plan.cv_patience is not None and outside >= plan.cv_patience:
            break
    return np.array(rows)


def select_from_curve(curve: np.ndarray) -> CvResult:
    """Minimum-error level and the one-standard-error level.

    Ties go to the largest level.
    """
    levels, mean, se = curve[:, 0], curve[:, 1], curve[:, 2]
    best = np.flatnonzero(mean == mean.min())
    i_min = best[np.argmax(levels[best])]
    ok = mean <= mean[i_min] + se[i_min]
    return CvResult(float(levels[i_min]), float(levels[ok].max()), curve)


def cv_select(W, y, plan: PenaltyPlan) -> CvResult:
    """K-fold cross-validation over the plan's grid (standardised within folds)."""
    return select_from_curve(cv_curve(W, y, plan))


def plugin_lambda(n: int, d: int, sigma_hat: float, c: float = 1.1, alpha: float | None = None) -> float:
    """``2 c sqrt(n) Phi^{-1}(1 - alpha / (2 d)) sigma_hat`` with ``alpha = 0.1 / ln n``.

    This is on the un-normalised scale; the level of this module's objective
    is the value divided by ``n``.
    """
    if alpha is None:
        alpha = 0.1 / math.log(n)
    return 2.0 * c * math.sqrt(n) * float(norm.isf(alpha / (2.0 * max(d, 1)))) * sigma_hat


def _post_lasso_sigma(prob: _Problem, c: np.ndarray) -> float:
    cols = np.flatnonzero(c)
    e = prob.yt
    if cols.size:
        A = prob.A[:, cols]
        coef, *_ = np.linalg.lstsq(A, prob.yt, rcond=None)
        e = prob.yt - A @ coef
    return math.sqrt(float(e @ e) / prob.n)


def plugin_penalty(W, y, plan: PenaltyPlan) -> float:
    """Data-driven plug-in level for the normalised objective.

    The noise scale starts from the residuals of the unpenalised fit and is
    re-estimated from post-LASSO residuals ``plan.plugin_iters`` times.
    """
    prob = _Problem(W, y, plan.mask, plan.standardize)
    per_sigma = plugin_lambda(prob.n, prob.d, 1.0, plan.plugin_c, plan.plugin_alpha) / prob.n
    sigma = prob.ynorm
    for _ in range(plan.plugin_iters):
        if sigma == 0:
            break
        c, r = prob.start()
        prob.solve(per_sigma * sigma, c, r, plan.tol, plan.max_sweeps)
        new = _post_lasso_sigma(prob, c)
        if abs(new - sigma) <= 1e-8 * sigma:
            sigma = new
            break
        sigma = new
    return per_sigma * sigma


def fit(W, y, plan: PenaltyPlan) -> LassoFit:
    """Fit at the level the plan's rule selects."""
    if plan.rule in ("cvmin", "cv1se"):
        cv = cv_select(W, y, plan)
        level = cv.level_min if plan.rule == "cvmin" else cv.level_1se
        # warm path down to the chosen level on the full data
        prob = _Problem(W, y, plan.mask, plan.standardize)
        out = _path(prob, cv.curve[cv.curve[:, 0] >= level, 0], plan.tol, plan.max_sweeps)[-1]
        out.cv_curve = cv.curve
    else:
        level = float(plan.level) if plan.rule == "fixed" else plugin_penalty(W, y, plan)
        out = lasso_fit(W, y, level, plan.mask, plan.standardize, plan.tol, plan.max_sweeps)
    out.metadata["rule"] = plan.rule
    return out


def dataset_design(data: Dataset):
    """Regressors ``[X without intercept, Z]`` and the mask penalising only Z."""
    Xs = data.slopes_X
    W = np.column_stack([Xs, data.Z.values]) if data.d else Xs
    mask = np.r_[np.zeros(Xs.shape[1], dtype=bool), np.ones(data.d, dtype=bool)]
    return W, mask


def kkt_violation(fit: LassoFit, W, y) -> float:
    """Largest breach of the optimality conditions at ``fit``.

    For penalised nonzero coefficients the gradient of the loss must equal
    ``level * w_j * sign``; for penalised zeros it must be bounded by
    ``level * w_j``; for unpenalised ones (and the intercept) it must vanish.
    """
    W = np.asarray(W, dtype=float)
    W = W[:, None] if W.ndim == 1 else W
    r = fit.residuals(W, y)
    n = r.shape[0]
    g = (2.0 / n) * (W.T @ r)
    bound = fit.penalty_level * fit.penalty_weights
    worst = abs(2.0 / n * r.sum())
    for j in range(W.shape[1]):
        if not fit.mask[j]:
            v = abs(g[j])
        elif fit.coefficients[j] != 0:
            v = abs(g[j] - bound[j] * np.sign(fit.coefficients[j]))
        else:
            v = max(0.0, abs(g[j]) - bound[j])
        worst = max(worst, v)
    return float(worst)


def objective(fit: LassoFit, W, y) -> float:
    r = fit.residuals(W, y)
    pen = np.sum(fit.penalty_weights[fit.mask] * np.abs(fit.coefficients[fit.mask]))
    return float(r @ r / r.shape[0] + fit.penalty_level * pen)


def objective_trace(W, y, level: float, mask=None, standardize: bool = True, sweeps: int = 20) -> np.ndarray:
    """Objective value after each of ``sweeps`` plain cyclic sweeps from zero."""
    prob = _Problem(W, y, mask, standardize)
    c, r = prob.start()
    thresh = 0.5 * prob.n * level
    out = []
    for _ in range(sweeps):
        if prob.d:
            cd_sweep(prob.A, prob.colsq, r, c, thresh)
        out.append(float(r @ r) / prob.n + level * np.abs(c).sum())
    return np.array(out)
