"""Corrected OLS for the normal / half-normal frontier."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import SQRT_2_OVER_PI, efficiency_scores, loglik_residuals, sample_skewness
from .frontier import CompositeErrorParams, Dataset, FrontierFit
from .linalg import OlsFit, ols_solve

SIGMA_V_FLOOR = 1e-12


class SigmaVFloored(UserWarning):
    """The moment estimate of sigma_v^2 came out negative and was floored."""


@dataclass
class ColsFit:
    beta0_corrected: float
    slopes: np.ndarray
    sigma: CompositeErrorParams
    raw_skewness: float
    wrong_skew: bool
    residuals: np.ndarray  # OLS residuals, mean zero
    mu2: float
    mu3: float
    names: tuple
    support: tuple
    ols: OlsFit = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def coefficients(self) -> np.ndarray:
        return np.r_[self.beta0_corrected, self.slopes]

    @property
    def composite_residuals(self) -> np.ndarray:
        """Residuals about the corrected frontier, ``e - sqrt(2/pi) sigma_u``."""
        return self.residuals - SQRT_2_OVER_PI * self.sigma.sigma_u

    def std_errors(self) -> np.ndarray:
        n, k = self.ols.residuals.shape[0], self.ols.coefficients.shape[0]
        s2 = self.ols.rss / (n - k)
        return np.sqrt(s2 * np.diag(self.ols.xtx_inverse))

    def to_frontier_fit(self, method: str = "COLS", efficiency_method: str = "jlms") -> FrontierFit:
        eps = self.composite_residuals
        return FrontierFit(
            method=method,
            names=self.names,
            coefficients=self.coefficients,
            std_errors=self.std_errors(),
            sigma=self.sigma,
            residuals=eps,
            efficiency=efficiency_scores(eps, self.sigma, efficiency_method),
            support=self.support,
            wrong_skew=self.wrong_skew,
            loglik=loglik_residuals(eps, self.sigma),
            diagnostics={"mu2": self.mu2, "mu3": self.mu3, "raw_skewness": self.raw_skewness, **self.diagnostics},
        )


def sigma_u_from_mu3(mu3: float) -> float:
    """Invert ``mu3 = ((pi - 4)/pi) sqrt(2/pi) sigma_u^3``; zero unless ``mu3 < 0``.

    The cube root is taken of the positive quantity ``-mu3 * pi/(4 - pi) * sqrt(pi/2)``.
    """
    if not mu3 < 0:
        return 0.0
    return (-mu3 * math.pi / (4.0 - math.pi) * math.sqrt(math.pi / 2.0)) ** (1.0 / 3.0)


def cols_from_residuals(e: np.ndarray):
    """Moment estimates ``(sigma params, mu2, mu3, floored)`` from OLS residuals."""
    n = e.shape[0]
    mu2 = float(e @ e) / n
    mu3 = float(np.sum(e ** 3)) / n
    su = sigma_u_from_mu3(mu3)
    sv2 = mu2 - (math.pi - 2.0) / math.pi * su * su
    floored = sv2 < SIGMA_V_FLOOR
    if floored:
        warnings.warn(f"sigma_v^2 moment estimate {sv2:.3g} floored at {SIGMA_V_FLOOR}", SigmaVFloored, stacklevel=3)
        sv2 = SIGMA_V_FLOOR
    return CompositeErrorParams(su * su, sv2), mu2, mu3, floored


def cols_fit(data: Dataset, support: Sequence[int] | None = ()) -> ColsFit:
    """COLS on ``[X, Z_support]``: OLS slopes, moment variances, shifted intercept.

    ``support=None`` uses every column of Z.
    """
    design = data.design(support)
    ols = ols_solve(design, data.y)
    e = ols.residuals
    sigma, mu2, mu3, floored = cols_from_residuals(e)
    coef = ols.coefficients
    intercept = coef[0] + SQRT_2_OVER_PI * sigma.sigma_u
    support = tuple(range(data.d)) if support is None else tuple(sorted(support))
    return ColsFit(
        beta0_corrected=float(intercept),
        slopes=coef[1:].copy(),
        sigma=sigma,
        raw_skewness=sample_skewness(e),
        wrong_skew=bool(mu3 > 0),
        residuals=e,
        mu2=mu2,
        mu3=mu3,
        names=design.column_names,
        support=support,
        ols=ols,
        diagnostics={"sigma_v_floored": floored},
    )
