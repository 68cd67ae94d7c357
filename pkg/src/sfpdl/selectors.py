"""Post-single and post-double LASSO selection, second-stage refits and cross-fitting.

Supports are index sets into the columns of ``Z`` (zero-based).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lasso
from .cols import cols_fit
from .errors import SupportTooLarge
from .frontier import CompositeErrorParams, Dataset, FrontierFit
from .mle import MleOptions, mle_fit

SELECTORS = ("none", "all", "psl", "pdl")
STAGE2 = ("cols", "mle")


@dataclass
class SelectionResult:
    support: tuple
    per_stage_supports: list
    method: str
    penalty_levels_used: list = field(default_factory=list)

    def __post_init__(self):
        self.support = tuple(sorted(set(self.support)))


def psl_select(data: Dataset, plan: lasso.PenaltyPlan) -> SelectionResult:
    """One LASSO of ``y`` on ``[X, Z]`` with only ``Z`` penalised."""
    if data.d == 0:
        return SelectionResult((), [()], "PSL", [np.nan])
    W, mask = lasso.dataset_design(data)
    fit = lasso.fit(W, data.y, plan.with_mask(mask))
    p = data.p
    stage = tuple(j - p for j in fit.support)
    return SelectionResult(stage, [stage], "PSL", [fit.penalty_level])


def pdl_select(data: Dataset, plan: lasso.PenaltyPlan) -> SelectionResult:
    """LASSO of ``y`` on ``Z``, then of each mandatory input on ``Z``; union of supports.

    Every stage penalises all of ``Z`` and picks its own level by ``plan.rule``.
    """
    responses = [data.y] + [data.slopes_X[:, l] for l in range(data.p)]
    if data.d == 0:
        return SelectionResult((), [()] * len(responses), "PDL", [np.nan] * len(responses))
    Z = data.Z.values
    full = plan.with_mask(None)
    stages, levels = [], []
    for target in responses:
        fit = lasso.fit(Z, target, full)
        stages.append(tuple(fit.support))
        levels.append(fit.penalty_level)
    union = set().union(*stages)
    return SelectionResult(tuple(union), stages, "PDL", levels)


def select(data: Dataset, selector: str, plan: lasso.PenaltyPlan | None = None) -> SelectionResult:
    """Dispatch on ``selector`` in ``none | all | psl | pdl``."""
    selector = selector.lower()
    if selector == "none":
        return SelectionResult((), [], "No-Z")
    if selector == "all":
        return SelectionResult(tuple(range(data.d)), [], "All-Z")
    if plan is None:
        raise ValueError(f"selector {selector!r} needs a penalty plan")
    if selector == "psl":
        return psl_select(data, plan)
    if selector == "pdl":
        return pdl_select(data, plan)
    raise ValueError(f"selector must be one of {SELECTORS}, got {selector!r}")


def post_fit(data: Dataset, selection: SelectionResult, stage2: str = "cols",
             mle_opts: MleOptions | None = None, efficiency_method: str = "jlms") -> FrontierFit:
    """COLS or MLE restricted to ``[X, Z_support]``."""
    stage2 = stage2.lower()
    if stage2 not in STAGE2:
        raise ValueError(f"stage2 must be one of {STAGE2}, got {stage2!r}")
    k = data.X.k + len(selection.support)
    if data.n <= k:
        raise SupportTooLarge(f"n={data.n} but the post-selection design has {k} columns")
    chain = f"{selection.method}-{stage2.upper()}"
    if stage2 == "cols":
        out = cols_fit(data, selection.support).to_frontier_fit(chain, efficiency_method)
    else:
        out = mle_fit(data, selection.support, mle_opts).to_frontier_fit(chain, efficiency_method)
    out.diagnostics["per_stage_supports"] = selection.per_stage_supports
    out.diagnostics["penalty_levels"] = selection.penalty_levels_used
    return out


def estimate(data: Dataset, selector: str = "pdl", stage2: str = "cols", plan: lasso.PenaltyPlan | None = None,
             mle_opts: MleOptions | None = None, efficiency_method: str = "jlms") -> FrontierFit:
    """Selection followed by the second-stage fit."""
    return post_fit(data, select(data, selector, plan), stage2, mle_opts, efficiency_method)


def _widen(fit: FrontierFit, names: list[str]):
    """Coefficients and SEs on ``names``; coefficients outside the support are zero."""
    coef = np.zeros(len(names))
    se = np.zeros(len(names))
    for i, name in enumerate(names):
        if name in fit.names:
            coef[i] = fit.coef(name)
            se[i] = fit.se(name)
    return coef, se


def cross_fit(data: Dataset, plan: lasso.PenaltyPlan, stage2: str = "cols", selector: str = "pdl",
              seed: int = 0, swap: bool = False, mle_opts: MleOptions | None = None,
              efficiency_method: str = "jlms") -> FrontierFit:
    """Two-fold cross-fitting: select on one half, fit on the other, swap, average.

    The halves come from a seeded permutation. Coefficients (zero outside a
    half's support) and the variance parameters are averaged; standard errors
    combine as ``sqrt(se_a^2 + se_b^2) / 2``. Residuals and efficiency scores
    of each row come from the fit on the half the row belongs to.
    """
    n = data.n
    if n < 40:
        raise ValueError(f"cross-fitting needs n >= 40, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    halves = [np.sort(perm[: n // 2]), np.sort(perm[n // 2:])]
    if swap:
        halves.reverse()
    fits, selections = [], []
    for sel_rows, fit_rows in ((halves[0], halves[1]), (halves[1], halves[0])):
        sel = select(data.subset(sel_rows), selector, plan)
        fits.append(post_fit(data.subset(fit_rows), sel, stage2, mle_opts, efficiency_method))
        selections.append(sel)
    support = tuple(sorted(set(selections[0].support) | set(selections[1].support)))
    names = list(data.X.column_names) + [data.Z.column_names[j] for j in support]
    (ca, sa), (cb, sb) = _widen(fits[0], names), _widen(fits[1], names)
    sigma = CompositeErrorParams(0.5 * (fits[0].sigma.sigma_u_sq + fits[1].sigma.sigma_u_sq),
                                 0.5 * (fits[0].sigma.sigma_v_sq + fits[1].sigma.sigma_v_sq))
    resid, eff = np.empty(n), np.empty(n)
    for f, rows in zip(fits, (halves[1], halves[0])):
        resid[rows] = f.residuals
        eff[rows] = f.efficiency
    lls = [f.loglik for f in fits]
    chain = fits[0].method.replace("-", "-CF-", 1)
    return FrontierFit(
        method=chain,
        names=tuple(names),
        coefficients=0.5 * (ca + cb),
        std_errors=0.5 * np.sqrt(sa ** 2 + sb ** 2),
        sigma=sigma,
        residuals=resid,
        efficiency=eff,
        support=support,
        wrong_skew=fits[0].wrong_skew or fits[1].wrong_skew,
        loglik=None if None in lls else float(sum(lls)),
        diagnostics={"half_supports": [s.support for s in selections], "halves": halves,
                     "half_fits": fits},
    )
