"""Stochastic frontier estimation with many candidate covariates.

COLS and normal / half-normal maximum likelihood, a partially penalised LASSO
for selecting covariates, post-single and post-double selection pipelines,
simulation designs and numerical checks of Neyman orthogonality.
"""
from .cols import ColsFit, cols_fit
from .distributions import composite_moments, efficiency_scores, log_mills, mills, sample_skewness
from .errors import SfpdlError
from .frontier import (
    CompositeErrorParams,
    Dataset,
    Form,
    FrontierFit,
    FrontierSpec,
    LevelData,
    expand_spec,
    returns_to_scale,
)
from .lasso import LassoFit, PenaltyPlan
from .mle import MleFit, MleOptions, mle_fit, profile_gamma
from .selectors import SelectionResult, cross_fit, estimate, pdl_select, post_fit, psl_select

__version__ = "0.1.0"

__all__ = [
    "ColsFit", "CompositeErrorParams", "Dataset", "Form", "FrontierFit", "FrontierSpec", "LassoFit",
    "LevelData", "MleFit", "MleOptions", "PenaltyPlan", "SelectionResult", "SfpdlError", "cols_fit",
    "composite_moments", "cross_fit", "efficiency_scores", "estimate", "expand_spec", "log_mills",
    "mills", "mle_fit", "pdl_select", "post_fit", "profile_gamma", "psl_select", "returns_to_scale",
    "sample_skewness",
]
