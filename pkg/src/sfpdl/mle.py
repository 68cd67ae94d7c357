"""Maximum likelihood for the normal / half-normal stochastic frontier.

The likelihood is maximised with BFGS on the unconstrained vector
``(coefficients, log sigma^2, logit gamma)`` using the analytic gradient.
The ``gamma = 0`` boundary is never reached by that map, so it is evaluated
separately (OLS slopes, ``sigma^2 = RSS / n``) and compared with the interior
optimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .cols import cols_fit
from .distributions import (
    SQRT_2_OVER_PI,
    efficiency_scores,
    gaussian_loglik,
    loglik_design,
    pack_theta,
    unpack_theta,
)
from .errors import NoConvergence
from .frontier import CompositeErrorParams, Dataset, FrontierFit
from .linalg import ols_solve


@dataclass
class MleOptions:
    max_iter: int = 500
    gtol: float = 1e-6  # on the per-observation gradient, max norm
    restarts: int = 3
    seed: int = 0
    jitter: float = 0.1
    hessian_step: float = 1e-5
    efficiency_method: str = "jlms"


@dataclass
class MleFit:
    names: tuple
    coefficients: np.ndarray
    sigma: CompositeErrorParams
    loglik: float
    std_errors: np.ndarray  # coefficients..., sigma^2, gamma
    converged: bool
    boundary_solution: bool
    iterations: int
    residuals: np.ndarray
    support: tuple
    grad_norm: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def beta0(self) -> float:
        return float(self.coefficients[0])

    def to_frontier_fit(self, method: str = "MLE", efficiency_method: str = "jlms") -> FrontierFit:
        k = self.coefficients.shape[0]
        return FrontierFit(
            method=method,
            names=self.names,
            coefficients=self.coefficients,
            std_errors=self.std_errors[:k],
            sigma=self.sigma,
            residuals=self.residuals,
            efficiency=efficiency_scores(self.residuals, self.sigma, efficiency_method),
            support=self.support,
            wrong_skew=self.boundary_solution,
            loglik=self.loglik,
            sigma_std_errors={"sigma_sq": float(self.std_errors[k]), "gamma": float(self.std_errors[k + 1])},
            diagnostics={"converged": self.converged, "boundary_solution": self.boundary_solution,
                         "iterations": self.iterations, **self.diagnostics},
        )


def _objective(W, y):
    n = y.shape[0]

    def f(theta):
        value, grad, _ = loglik_design(theta, W, y)
        if not np.isfinite(value):
            return np.inf, np.zeros_like(theta)
        return -value / n, -grad / n

    return f


def _hessian(theta, W, y, step):
    """Central differences of the analytic gradient, symmetrised."""
    k = theta.shape[0]
    H = np.empty((k, k))
    for i in range(k):
        h = step * max(1.0, abs(theta[i]))
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        H[:, i] = (loglik_design(tp, W, y)[1] - loglik_design(tm, W, y)[1]) / (2 * h)
    return 0.5 * (H + H.T)


def _polish(theta, W, y, step, iters=20):
    """Damped Newton steps to tighten the first-order condition."""
    f = _objective(W, y)
    val, g = f(theta)
    for _ in range(iters):
        H = _hessian(theta, W, y, step) / y.shape[0]
        try:
            direction = np.linalg.solve(H, g)  # H is the Hessian of -f
        except np.linalg.LinAlgError:
            break
        t = 1.0
        while t > 1e-6:
            cand = theta + t * direction
            cval, cg = f(cand)
            if cval <= val:
                break
            t *= 0.5
        else:
            break
        theta, val, g = cand, cval, cg
        if np.max(np.abs(g)) < 1e-10:
            break
    return theta


def _start_values(data: Dataset, support) -> np.ndarray:
    cf = cols_fit(data, support)
    if not cf.wrong_skew:
        gamma = min(max(cf.sigma.gamma, 0.05), 0.95)
        return pack_theta(cf.coefficients, cf.sigma.sigma_sq, gamma)
    # wrong skew: OLS slopes with gamma = 0.5
    gamma = 0.5
    s2 = cf.mu2 / (1.0 - 2.0 / math.pi * gamma)
    coef = cf.ols.coefficients.copy()
    coef[0] += SQRT_2_OVER_PI * math.sqrt(gamma * s2)
    return pack_theta(coef, s2, gamma)


def _interior(theta0, W, y, opts: MleOptions):
    f = _objective(W, y)
    res = minimize(f, theta0, jac=True, method="BFGS",
                   options={"gtol": opts.gtol * 0.1, "maxiter": opts.max_iter})
    theta = res.x
    gnorm = float(np.max(np.abs(f(theta)[1])))
    if gnorm >= opts.gtol and np.isfinite(res.fun):
        theta = _polish(theta, W, y, opts.hessian_step)
        gnorm = float(np.max(np.abs(f(theta)[1])))
    value = loglik_design(theta, W, y)[0]
    return theta, value, gnorm, int(res.nit)


def _boundary(W, y):
    ols = ols_solve(W, y)
    n = y.shape[0]
    s2 = ols.rss / n
    k = W.shape[1]
    se = np.empty(k + 2)
    se[:k] = np.sqrt(s2 * np.diag(ols.xtx_inverse))
    se[k] = math.sqrt(2.0 / n) * s2
    se[k + 1] = np.nan
    return ols, s2, gaussian_loglik(ols.residuals), se


def _interior_se(theta, W, y, step):
    H = _hessian(theta, W, y, step)
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        return np.full(theta.shape[0], np.nan)
    _, s2, gamma = unpack_theta(theta)
    jac = np.ones(theta.shape[0])
    jac[-2] = s2
    jac[-1] = gamma * (1 - gamma)
    var = np.diag(cov) * jac ** 2
    return np.where(var > 0, np.sqrt(np.abs(var)), np.nan)


def mle_fit(data: Dataset, support: Sequence[int] | None = (), opts: MleOptions | None = None) -> MleFit:
    """Maximise the normal / half-normal likelihood on ``[X, Z_support]``.

    Starts from COLS (or OLS with ``gamma = 0.5`` under wrong skew), retries
    from jittered starts when BFGS stalls, and compares the interior optimum
    with the ``gamma = 0`` boundary whenever the OLS residuals are positively
    skewed or the interior search fails.
    """
    opts = opts or MleOptions()
    design = data.design(support)
    W, y = design.values, data.y
    n = y.shape[0]
    support = tuple(range(data.d)) if support is None else tuple(sorted(support))

    ols, s2_b, ll_b, se_b = _boundary(W, y)
    e = ols.residuals
    positive_skew = float(np.sum(e ** 3)) > 0

    theta0 = _start_values(data, support)
    rng = np.random.default_rng(opts.seed)
    best = None
    total_iter = 0
    for attempt in range(1 + opts.restarts):
        start = theta0 if attempt == 0 else theta0 + opts.jitter * rng.standard_normal(theta0.shape) * np.maximum(1.0, np.abs(theta0))
        theta, value, gnorm, nit = _interior(start, W, y, opts)
        total_iter += nit
        if np.isfinite(value) and (best is None or value > best[1]):
            best = (theta, value, gnorm)
        if gnorm < opts.gtol:
            break
    theta, value, gnorm = best if best is not None else (theta0, -np.inf, np.inf)
    interior_ok = gnorm < opts.gtol and np.isfinite(value)
    gamma_hat = unpack_theta(theta)[2]

    use_boundary = (positive_skew or not interior_ok) and (
        not interior_ok or value <= ll_b + 1e-9 * abs(ll_b) or gamma_hat < 1e-6)
    if use_boundary:
        if not interior_ok and not positive_skew:
            raise NoConvergence(f"no interior optimum after {1 + opts.restarts} starts (max score {gnorm:.2e})")
        return MleFit(design.column_names, ols.coefficients.copy(), CompositeErrorParams(0.0, s2_b), ll_b, se_b,
                      True, True, total_iter, e.copy(), support, 0.0,
                      {"interior_loglik": float(value), "interior_gamma": gamma_hat})
    if not interior_ok:
        if gamma_hat > 1 - 1e-6:
            raise NoConvergence("log-likelihood keeps rising toward gamma = 1 (sigma_v -> 0); no interior optimum")
        raise NoConvergence(f"no interior optimum after {1 + opts.restarts} starts (max score {gnorm:.2e})")
    coef, s2, gamma = unpack_theta(theta)
    resid = y - W @ coef
    return MleFit(design.column_names, coef, CompositeErrorParams.from_gamma(s2, gamma), float(value),
                  _interior_se(theta, W, y, opts.hessian_step), True, False, total_iter, resid, support,
                  gnorm, {"boundary_loglik": ll_b, "theta": theta})


def profile_gamma(data: Dataset, support: Sequence[int] | None, gammas, opts: MleOptions | None = None) -> np.ndarray:
    """Log-likelihood maximised over everything except ``gamma``, per grid value."""
    opts = opts or MleOptions()
    W, y = data.design(support).values, data.y
    n = y.shape[0]
    ols, s2_ols, ll_b, _ = _boundary(W, y)
    out = np.empty(len(gammas))
    for i, g in enumerate(gammas):
        if not 0 <= g < 1:
            raise ValueError(f"gamma grid values must lie in [0, 1), got {g}")
        if g == 0:
            out[i] = ll_b
            continue
        eta = math.log(g / (1 - g))

        def f(free):
            value, grad, _ = loglik_design(np.r_[free, eta], W, y)
            return -value / n, -grad[:-1] / n

        s2 = s2_ols / (1.0 - 2.0 / math.pi * g)
        coef = ols.coefficients.copy()
        coef[0] += SQRT_2_OVER_PI * math.sqrt(g * s2)
        res = minimize(f, np.r_[coef, math.log(s2)], jac=True, method="BFGS",
                       options={"gtol": opts.gtol * 0.1, "maxiter": opts.max_iter})
        out[i] = -res.fun * n
    return out
