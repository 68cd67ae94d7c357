"""Frontier specification: mandatory inputs, selectable shifters, functional form.

The composite-error model is ``y = b0 + x b + z d + v - u`` with
``v ~ N(0, sigma_v^2)`` and ``u ~ |N(0, sigma_u^2)|``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, MissingCoefficient, NonPositiveValue, UnknownColumn
from .linalg import DesignMatrix

INTERCEPT = "(Intercept)"


class Form(str, enum.Enum):
    COBB_DOUGLAS = "cobb-douglas"
    TRANSLOG = "translog"


@dataclass(frozen=True)
class CompositeErrorParams:
    """Variances of the noise (``sigma_v_sq``) and inefficiency (``sigma_u_sq``)."""

    sigma_u_sq: float
    sigma_v_sq: float

    def __post_init__(self):
        if not (self.sigma_u_sq >= 0 and self.sigma_v_sq > 0):
            raise ValueError(f"invalid variances sigma_u_sq={self.sigma_u_sq}, sigma_v_sq={self.sigma_v_sq}")

    @classmethod
    def from_std(cls, sigma_u: float, sigma_v: float) -> "CompositeErrorParams":
        return cls(sigma_u ** 2, sigma_v ** 2)

    @classmethod
    def from_gamma(cls, sigma_sq: float, gamma: float) -> "CompositeErrorParams":
        return cls(gamma * sigma_sq, (1.0 - gamma) * sigma_sq)

    @classmethod
    def from_lambda(cls, sigma: float, lam: float) -> "CompositeErrorParams":
        s2 = sigma * sigma
        return cls(s2 * lam * lam / (1 + lam * lam), s2 / (1 + lam * lam))

    @property
    def sigma_u(self) -> float:
        return math.sqrt(self.sigma_u_sq)

    @property
    def sigma_v(self) -> float:
        return math.sqrt(self.sigma_v_sq)

    @property
    def sigma_sq(self) -> float:
        return self.sigma_u_sq + self.sigma_v_sq

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    @property
    def lam(self) -> float:
        return math.sqrt(self.sigma_u_sq / self.sigma_v_sq)

    @property
    def gamma(self) -> float:
        return self.sigma_u_sq / self.sigma_sq


@dataclass(frozen=True)
class Dataset:
    """Response, mandatory design ``X`` (intercept first) and selectable ``Z``."""

    y: np.ndarray
    X: DesignMatrix
    Z: DesignMatrix

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        if not (self.X.n == self.Z.n == y.shape[0]):
            raise DimensionMismatch(f"y has {y.shape[0]} rows, X {self.X.n}, Z {self.Z.n}")
        names = list(self.X.column_names) + list(self.Z.column_names)
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique across X and Z")
        object.__setattr__(self, "y", y)

    @classmethod
    def from_arrays(cls, y, X, Z=None, x_names=None, z_names=None, add_intercept=True) -> "Dataset":
        X = np.asarray(X, dtype=float)
        X = X[:, None] if X.ndim == 1 else X
        n = X.shape[0]
        x_names = list(x_names or [f"x{j + 1}" for j in range(X.shape[1])])
        if add_intercept:
            X = np.column_stack([np.ones(n), X])
            x_names = [INTERCEPT] + x_names
        Z = np.empty((n, 0)) if Z is None else np.asarray(Z, dtype=float)
        z_names = list(z_names or [f"z{j + 1}" for j in range(Z.shape[1])])
        return cls(y, DesignMatrix(X, x_names, add_intercept), DesignMatrix(Z, z_names, False))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        """Number of mandatory regressors, intercept excluded."""
        return self.X.k - int(self.X.has_intercept)

    @property
    def d(self) -> int:
        return self.Z.k

    @property
    def slopes_X(self) -> np.ndarray:
        """Mandatory columns without the intercept."""
        return self.X.values[:, int(self.X.has_intercept):]

    def design(self, support: Sequence[int] | None = None) -> DesignMatrix:
        """``[X, Z_support]``; ``None`` means every Z column."""
        cols = range(self.d) if support is None else sorted(support)
        cols = list(cols)
        values = np.column_stack([self.X.values, self.Z.values[:, cols]]) if cols else self.X.values
        names = self.X.column_names + tuple(self.Z.column_names[j] for j in cols)
        return DesignMatrix(values, names, self.X.has_intercept)

    def subset(self, rows) -> "Dataset":
        return Dataset(self.y[rows], self.X.rows(rows), self.Z.rows(rows))


@dataclass
class FrontierFit:
    """Common result of every second-stage estimator (COLS or MLE)."""

    method: str
    names: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    sigma: CompositeErrorParams
    residuals: np.ndarray
    efficiency: np.ndarray
    support: tuple = ()
    wrong_skew: bool = False
    loglik: float | None = None
    sigma_std_errors: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def coef(self, name: str) -> float:
        try:
            return float(self.coefficients[self.names.index(name)])
        except ValueError:
            raise MissingCoefficient(name) from None

    def se(self, name: str) -> float:
        try:
            return float(self.std_errors[self.names.index(name)])
        except ValueError:
            raise MissingCoefficient(name) from None

    @property
    def mean_efficiency(self) -> float:
        return float(np.mean(self.efficiency))

    @property
    def num_selected(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class FrontierSpec:
    form: Form = Form.COBB_DOUGLAS
    mandatory: tuple = ()
    selectable: tuple = ()
    second_order_optional: bool = False
    mean_deviate_logs: bool = True

    def __post_init__(self):
        object.__setattr__(self, "form", Form(self.form))
        object.__setattr__(self, "mandatory", tuple(self.mandatory))
        object.__setattr__(self, "selectable", tuple(self.selectable))
        overlap = set(self.mandatory) & set(self.selectable)
        if overlap:
            raise ValueError(f"variables both mandatory and selectable: {sorted(overlap)}")

    @property
    def has_second_order(self) -> bool:
        return self.form is Form.TRANSLOG or self.second_order_optional

    def second_order_names(self) -> list[str]:
        return [second_order_name(a, b) for a, b in combinations_with_replacement(self.mandatory, 2)]


def second_order_name(a: str, b: str) -> str:
    return f"{a}^2" if a == b else f"{a}:{b}"


@dataclass(frozen=True)
class LevelData:
    """Raw (unlogged) columns as read from disk.

    ``dummies`` are passed through untransformed; they are never logged.
    """

    columns: Mapping[str, np.ndarray]
    output: str
    dummies: frozenset = frozenset()

    @property
    def n(self) -> int:
        return len(self.columns[self.output])


def _log_column(data: LevelData, name: str) -> np.ndarray:
    try:
        col = np.asarray(data.columns[name], dtype=float)
    except KeyError:
        raise UnknownColumn(name) from None
    bad = np.flatnonzero(~(col > 0))
    if bad.size:
        raise NonPositiveValue(int(bad[0]), name, col[bad[0]])
    return np.log(col)


def expand_spec(raw: LevelData, spec: FrontierSpec) -> Dataset:
    """Build the log-linear design for ``spec`` from level data.

    Column order: intercept, first-order log inputs, second-order input
    terms (translog), then the selectable block. Squares and interactions
    are products of the centered logs when ``mean_deviate_logs`` is set.
    """
    for name in (*spec.mandatory, *spec.selectable):
        if name not in raw.columns:
            raise UnknownColumn(name)
    n = raw.n
    y = _log_column(raw, raw.output)
    logs = {}
    for name in spec.mandatory:
        col = _log_column(raw, name)
        logs[name] = col - col.mean() if spec.mean_deviate_logs else col

    x_cols, x_names = [np.ones(n)], [INTERCEPT]
    for name in spec.mandatory:
        x_cols.append(logs[name])
        x_names.append(name)

    second, second_names = [], []
    if spec.has_second_order:
        for a, b in combinations_with_replacement(spec.mandatory, 2):
            second.append(logs[a] * logs[b])
            second_names.append(second_order_name(a, b))

    z_cols = [np.asarray(raw.columns[name], dtype=float) for name in spec.selectable]
    z_names = list(spec.selectable)
    if spec.second_order_optional:
        z_cols += second
        z_names += second_names
    else:
        x_cols += second
        x_names += second_names

    Z = np.column_stack(z_cols) if z_cols else np.empty((n, 0))
    return Dataset(y, DesignMatrix(np.column_stack(x_cols), x_names, True), DesignMatrix(Z, z_names, False))


def returns_to_scale(fit, spec: FrontierSpec | Sequence[str]) -> float:
    """Sum of the first-order input elasticities.

    ``fit`` may be a :class:`FrontierFit` or any name -> coefficient mapping.
    With mean-deviated logs this is the scale elasticity at the sample mean.
    """
    inputs = spec.mandatory if isinstance(spec, FrontierSpec) else tuple(spec)
    if isinstance(fit, FrontierFit):
        return float(sum(fit.coef(name) for name in inputs))
    try:
        return float(sum(fit[name] for name in inputs))
    except KeyError as exc:
        raise MissingCoefficient(exc.args[0]) from None
