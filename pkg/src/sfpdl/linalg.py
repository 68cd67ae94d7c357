"""Dense least-squares primitives used by every estimator.

Least squares is solved through a reduced QR decomposition; the inverse of
``X'X`` is only formed when somebody asks for it (standard errors).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, RankDeficient, ZeroVariance

# condition-number ceiling for X'X
COND_LIMIT = 1e12


@dataclass(frozen=True)
class DesignMatrix:
    """An ``n x k`` regressor matrix with column names.

    When ``has_intercept`` is set the intercept is column 0.
    """

    values: np.ndarray
    column_names: tuple = ()
    has_intercept: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1:
            raise DimensionMismatch(f"design must be a non-empty 2-d array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("design matrix contains non-finite entries")
        names = tuple(self.column_names) or tuple(f"x{j}" for j in range(v.shape[1]))
        if len(names) != v.shape[1]:
            raise DimensionMismatch(f"{len(names)} names for {v.shape[1]} columns")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "column_names", names)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def take(self, columns: Sequence[int]) -> "DesignMatrix":
        columns = list(columns)
        return DesignMatrix(self.values[:, columns], tuple(self.column_names[j] for j in columns),
                            self.has_intercept and bool(columns) and columns[0] == 0)

    def rows(self, index) -> "DesignMatrix":
        return DesignMatrix(self.values[index], self.column_names, self.has_intercept)


def as_array(X) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.values
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


@dataclass
class OlsFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    r_factor: np.ndarray = field(repr=False)

    @cached_property
    def xtx_inverse(self) -> np.ndarray:
        """``(X'X)^{-1}`` rebuilt from the triangular factor."""
        k = self.r_factor.shape[0]
        r_inv = np.linalg.solve(self.r_factor, np.eye(k)) if k else np.empty((0, 0))
        return r_inv @ r_inv.T

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)


def _qr(X: np.ndarray):
    n, k = X.shape
    if k == 0:
        return np.empty((n, 0)), np.empty((0, 0))
    if n <= k:
        raise RankDeficient(f"need more rows than columns (n={n}, k={k})")
    q, r = np.linalg.qr(X)
    d = np.abs(np.diag(r))
    if d.min() == 0.0 or (d.max() / d.min()) ** 2 > COND_LIMIT:
        raise RankDeficient(f"X'X is numerically singular (k={k})")
    return q, r


def ols_solve(X, y) -> OlsFit:
    """Ordinary least squares of ``y`` on the columns of ``X``.

    Raises
    ------
    DimensionMismatch
        if ``len(y)`` differs from the number of rows of ``X``.
    RankDeficient
        if ``X`` is not of full column rank (condition of ``X'X`` above 1e12).
    """
    X = as_array(X)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"len(y)={y.shape[0]} but X has {X.shape[0]} rows")
    q, r = _qr(X)
    qty = q.T @ y
    coef = np.linalg.solve(r, qty) if r.size else np.zeros(0)
    fitted = q @ qty
    return OlsFit(coef, y - fitted, fitted, r)


def partial_out(target, Z) -> np.ndarray:
    """Residual of ``target`` after projecting it onto the span of ``Z``.

    ``target`` may be a vector or a matrix (each column is treated
    separately). An empty ``Z`` returns a copy of ``target``.
    """
    target = np.asarray(target, dtype=float)
    Z = as_array(Z)
    if Z.shape[0] != target.shape[0]:
        raise DimensionMismatch(f"target has {target.shape[0]} rows but Z has {Z.shape[0]}")
    if Z.shape[1] == 0:
        return target.copy()
    q, _ = _qr(Z)
    return target - q @ (q.T @ target)


def standardize_columns(X: DesignMatrix):
    """Center and scale every non-intercept column (sd with ``n - 1``).

    Returns ``(standardized, means, scales)``; the intercept column keeps
    mean 0 / scale 1 so that ``unstandardize`` is a plain affine inverse.
    """
    if not isinstance(X, DesignMatrix):
        X = DesignMatrix(X)
    v = X.values
    means = v.mean(axis=0)
    scales = v.std(axis=0, ddof=1) if X.n > 1 else np.zeros(X.k)
    if X.has_intercept:
        means[0], scales[0] = 0.0, 1.0
    for j in range(X.k):
        if not scales[j] > 0:
            raise ZeroVariance(X.column_names[j])
    return DesignMatrix((v - means) / scales, X.column_names, X.has_intercept), means, scales


def unstandardize(X: DesignMatrix, means, scales) -> DesignMatrix:
    return DesignMatrix(X.values * scales + means, X.column_names, X.has_intercept)
