"""Normal / half-normal composite error: moments, likelihood, efficiency.

Unconstrained likelihood parameterisation used throughout::

    theta = (coefficients..., log(sigma^2), log(gamma / (1 - gamma)))

with ``sigma^2 = sigma_u^2 + sigma_v^2``, ``gamma = sigma_u^2 / sigma^2`` and
``lambda = sigma_u / sigma_v = sqrt(gamma / (1 - gamma))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import erfcx, expit, log_ndtr, logit

from .errors import InvalidParams
from .frontier import CompositeErrorParams, Dataset

LOG_2PI = math.log(2.0 * math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_LOG_SQRT_HALF_PI = 0.5 * math.log(math.pi / 2.0)
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CompositeMoments:
    mu1: float
    mu2: float
    mu3: float
    skewness: float


def composite_moments(params: CompositeErrorParams) -> CompositeMoments:
    """Mean, variance, third central moment and skewness of ``v - u``.

    ``mu1`` is ``E(v - u) = -sqrt(2/pi) sigma_u``.
    """
    su = params.sigma_u
    mu1 = -SQRT_2_OVER_PI * su
    mu2 = params.sigma_v_sq + (math.pi - 2.0) / math.pi * params.sigma_u_sq
    mu3 = (math.pi - 4.0) / math.pi * SQRT_2_OVER_PI * su ** 3
    return CompositeMoments(mu1, mu2, mu3, mu3 / mu2 ** 1.5)


def log_mills(t):
    """``log(phi(t) / (1 - Phi(t)))`` without cancellation.

    For ``t >= 0`` the tail ratio comes from the scaled complementary error
    function, ``(1 - Phi(t)) / phi(t) = sqrt(pi/2) erfcx(t / sqrt 2)``, which
    is evaluated by its asymptotic continued fraction for large ``t``. For
    ``t < 0`` the denominator is ``Phi(-t)`` close to one and ``log_ndtr``
    keeps the small correction.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    tp = t[pos]
    out[pos] = -_LOG_SQRT_HALF_PI - np.log(erfcx(tp / _SQRT2))
    tn = t[~pos]
    out[~pos] = -0.5 * tn * tn - 0.5 * LOG_2PI - log_ndtr(-tn)
    return out if out.ndim else float(out)


def mills(t):
    """Inverse Mills ratio ``phi(t) / (1 - Phi(t))``."""
    return np.exp(log_mills(t))


def _mills_minus_t(t):
    """``mills(t) - t``, which tends to ``1/t`` for large ``t``."""
    t = np.asarray(t, dtype=float)
    out = mills(t) - t
    big = t > 30.0
    if np.any(big):
        ti = 1.0 / t[big]
        t2 = ti * ti
        out[big] = ti * (1 - t2 * (2 - t2 * (10 - t2 * (74 - 706 * t2))))
    return out


@dataclass
class LogLikEval:
    value: float
    grad: np.ndarray
    per_obs: np.ndarray


def pack_theta(coefficients, sigma_sq: float, gamma: float) -> np.ndarray:
    """Map natural parameters to the unconstrained vector.

    ``gamma`` must lie strictly inside (0, 1); the boundary ``gamma = 0`` has
    no unconstrained image and is evaluated with :func:`loglik_at`.
    """
    if not sigma_sq > 0:
        raise InvalidParams(f"sigma^2 must be positive, got {sigma_sq}")
    if not 0 < gamma < 1:
        raise InvalidParams(f"gamma must lie in (0, 1) for the unconstrained map, got {gamma}")
    return np.concatenate([np.asarray(coefficients, dtype=float), [math.log(sigma_sq), logit(gamma)]])


def unpack_theta(theta):
    theta = np.asarray(theta, dtype=float)
    return theta[:-2], math.exp(theta[-2]), float(expit(theta[-1]))


_SCALE_LIMIT = 600.0


def _loglik_terms(eps, sigma_sq, lam):
    sigma = math.sqrt(sigma_sq)
    a = eps * (lam / sigma)
    per_obs = math.log(2.0) - 0.5 * LOG_2PI - 0.5 * math.log(sigma_sq) + log_ndtr(-a) - eps * eps / (2 * sigma_sq)
    return per_obs, a, sigma


def loglik_design(theta, W: np.ndarray, y: np.ndarray, per_obs_grad: bool = False):
    """Log-likelihood and analytic gradient for design ``W``.

    Returns ``(value, grad, per_obs)``; with ``per_obs_grad`` the ``n x k``
    matrix of per-observation scores is returned in place of ``grad``.
    """
    theta = np.asarray(theta, dtype=float)
    beta = theta[:-2]
    tau, eta = theta[-2], theta[-1]
    if not (abs(tau) < _SCALE_LIMIT and abs(eta) < _SCALE_LIMIT and np.all(np.isfinite(beta))):
        # outside the representable range: treat as an impossible parameter value
        n = y.shape[0]
        bad = np.zeros((n, theta.shape[0])) if per_obs_grad else np.zeros(theta.shape[0])
        return -math.inf, bad, np.full(n, -math.inf)
    sigma_sq = math.exp(tau)
    lam = math.exp(0.5 * eta)
    with np.errstate(over="ignore", invalid="ignore"):
        eps = y - W @ beta
        per_obs, a, sigma = _loglik_terms(eps, sigma_sq, lam)
        m = mills(a)  # phi(-a) / Phi(-a)
        d_eps = (lam / sigma) * m + eps / sigma_sq  # -dl/d eps
        g_tau = -0.5 + 0.5 * a * m + eps * eps / (2 * sigma_sq)
        g_eta = -0.5 * a * m
    if per_obs_grad:
        scores = np.column_stack([W * d_eps[:, None], g_tau, g_eta])
        return float(per_obs.sum()), scores, per_obs
    grad = np.concatenate([W.T @ d_eps, [g_tau.sum(), g_eta.sum()]])
    return float(per_obs.sum()), grad, per_obs


def loglik(theta, data: Dataset, support: Sequence[int] | None = ()) -> LogLikEval:
    """Normal / half-normal log-likelihood on ``[X, Z_support]``.

    ``theta`` is in the unconstrained parameterisation (see module docs).
    """
    W = data.design(support).values
    theta = np.asarray(theta, dtype=float)
    if theta.shape[0] != W.shape[1] + 2:
        raise InvalidParams(f"theta has {theta.shape[0]} entries, expected {W.shape[1] + 2}")
    value, grad, per_obs = loglik_design(theta, W, data.y)
    return LogLikEval(value, grad, per_obs)


def loglik_at(coefficients, params: CompositeErrorParams, data: Dataset,
              support: Sequence[int] | None = ()) -> float:
    """Log-likelihood at natural parameters; ``sigma_u = 0`` is allowed."""
    W = data.design(support).values
    eps = data.y - W @ np.asarray(coefficients, dtype=float)
    return loglik_residuals(eps, params)


def loglik_residuals(eps, params: CompositeErrorParams) -> float:
    per_obs, _, _ = _loglik_terms(np.asarray(eps, dtype=float), params.sigma_sq, params.lam)
    return float(per_obs.sum())


def gaussian_loglik(residuals) -> float:
    """Profile Gaussian log-likelihood with ``sigma^2 = RSS / n``."""
    e = np.asarray(residuals, dtype=float)
    n = e.shape[0]
    s2 = float(e @ e) / n
    return -0.5 * n * (LOG_2PI + math.log(s2) + 1.0)


def efficiency_scores(residuals, params: CompositeErrorParams, method: str = "jlms") -> np.ndarray:
    """Firm-level technical efficiency from composite residuals.

    ``method="jlms"`` returns ``exp(-E[u | eps])``; ``"bc"`` returns
    ``E[exp(-u) | eps]``. Both equal one when ``sigma_u = 0``.
    """
    eps = np.asarray(residuals, dtype=float)
    if params.sigma_u_sq == 0:
        return np.ones_like(eps)
    s2 = params.sigma_sq
    mu_star = -eps * params.sigma_u_sq / s2
    s_star = params.sigma_u * params.sigma_v / params.sigma
    z = mu_star / s_star
    if method == "jlms":
        # E[u|eps] = s* (phi(z)/Phi(z) + z) = s* (mills(-z) - (-z))
        eu = s_star * _mills_minus_t(-z)
        return np.exp(-np.maximum(eu, 0.0))
    if method == "bc":
        return np.exp(log_ndtr(z - s_star) - log_ndtr(z) - mu_star + 0.5 * s_star * s_star)
    raise ValueError(f"unknown efficiency method {method!r}")


def conditional_mean_u(residuals, params: CompositeErrorParams) -> np.ndarray:
    """``E[u | eps]`` under the normal / half-normal model."""
    return -np.log(efficiency_scores(residuals, params, "jlms"))


def sample_skewness(e) -> float:
    """Moment skewness ``m3 / m2^{3/2}`` with denominator ``n``."""
    e = np.asarray(e, dtype=float)
    c = e - e.mean()
    m2 = np.mean(c * c)
    return float(np.mean(c ** 3) / m2 ** 1.5) if m2 > 0 else 0.0
