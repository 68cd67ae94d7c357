"""Simulation checks of Neyman orthogonality for COLS and MLE moment functions.

Everything is scalar: one input ``x``, one covariate ``z`` and

    y = beta0 + beta x + delta0 z + v - u,    x = a z + eta.

Partialled variables are ``x_perp = x - pi_x z`` and ``y_perp = y - pi_y z``.
Starred residuals are ``eps* = y_perp - beta0 - x_perp beta - z delta``.
With ``pi_x = a`` and ``pi_y = beta a + delta0`` the starred residual equals the
composite error when ``delta = 0``, so those are the true nuisance values of
the starred moments (they are the population projections when ``E z = 0``).
The unstarred moments use ``delta = delta0`` at truth.

MLE moments use ``r(t) = phi(t) / (1 - Phi(t))`` evaluated at ``rho eps*``;
with ``sigma = lambda = 1`` (``sigma_u^2 = sigma_v^2 = 1/2``) one has ``rho = 1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import mills
from .errors import TooFewBins

ORTHOGONAL_SE = 3.0
NOT_ORTHOGONAL_SE = 5.0
CHUNK = 1 << 17


class Moment(str, enum.Enum):
    A = "A"
    APRIME = "Aprime"
    ADOUBLEPRIME = "Adoubleprime"
    ASTAR_COLS = "Astar_cols"
    ASTAR_MLE = "Astar_mle"
    BSTAR = "Bstar"
    CSTAR = "Cstar"


NUISANCES = ("delta", "pi_x", "pi_y")


@dataclass(frozen=True)
class MomentSpec:
    id: Moment
    nuisance: tuple = NUISANCES
    requires_demeaned_z: bool = False

    @classmethod
    def of(cls, id) -> "MomentSpec":
        id = Moment(id)
        return cls(id, NUISANCES, id is Moment.CSTAR)


@dataclass(frozen=True)
class OrthoDGP:
    beta0: float = 1.0
    beta: float = 0.5
    delta0: float = 0.5
    a: float = 0.5  # E[x z] when E z = 0 and Var z = 1
    z_mean: float = 0.0
    sigma_u: float = math.sqrt(0.5)
    sigma_v: float = math.sqrt(0.5)
    hetero: float = 0.0  # sd of v scales with exp(hetero * z); breaks homoskewness

    @property
    def rho(self) -> float:
        """``lambda / sigma``."""
        return (self.sigma_u / self.sigma_v) / math.hypot(self.sigma_u, self.sigma_v)

    def truth(self) -> "OrthoParams":
        return OrthoParams(self.beta0, self.beta, self.delta0, self.a, self.beta * self.a + self.delta0, self.rho)

    def starred_truth(self) -> "OrthoParams":
        return replace(self.truth(), delta=0.0)


@dataclass(frozen=True)
class OrthoParams:
    beta0: float
    beta: float
    delta: float
    pi_x: float
    pi_y: float
    rho: float = 1.0

    def shifted(self, nuisance: str, amount: float) -> "OrthoParams":
        return replace(self, **{nuisance: getattr(self, nuisance) + amount})


@dataclass
class OrthoSample:
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    eps: np.ndarray
    dgp: OrthoDGP

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def demeaned(self) -> "OrthoSample":
        return replace(self, z=self.z - self.z.mean())


def ortho_sample(n: int, dgp: OrthoDGP | None = None, seed: int = 0) -> OrthoSample:
    dgp = dgp or OrthoDGP()
    rng = np.random.default_rng(seed)
    z = dgp.z_mean + rng.standard_normal(n)
    x = dgp.a * z + rng.standard_normal(n)
    v = rng.normal(0.0, dgp.sigma_v, n) * np.exp(dgp.hetero * z)
    u = np.abs(rng.normal(0.0, dgp.sigma_u, n))
    eps = v - u
    y = dgp.beta0 + dgp.beta * x + dgp.delta0 * z + eps
    return OrthoSample(x, z, y, eps, dgp)


def _eps_star(p: OrthoParams, s: OrthoSample):
    x_perp = s.x - p.pi_x * s.z
    return x_perp, (s.y - p.pi_y * s.z) - p.beta0 - x_perp * p.beta - s.z * p.delta


def moment_terms(spec: MomentSpec | Moment | str, params: OrthoParams, sample: OrthoSample) -> np.ndarray:
    """Per-observation values of the moment function."""
    mid = spec.id if isinstance(spec, MomentSpec) else Moment(spec)
    p, s = params, sample
    if mid in (Moment.A, Moment.APRIME):
        return s.x * (s.y - p.beta0 - s.x * p.beta - s.z * p.delta)
    if mid is Moment.ADOUBLEPRIME:
        return (s.x - p.pi_x * s.z) * (s.y - p.beta0 - s.x * p.beta - s.z * p.delta)
    x_perp, e = _eps_star(p, s)
    if mid is Moment.ASTAR_COLS:
        return x_perp * e
    if mid is Moment.ASTAR_MLE:
        return x_perp * (e + mills(p.rho * e))
    if mid is Moment.BSTAR:
        return s.z * (e + mills(p.rho * e))
    if mid is Moment.CSTAR:
        return e * mills(p.rho * e)
    raise ValueError(f"unknown moment {mid}")


@dataclass(frozen=True)
class Estimate:
    value: float
    mc_se: float

    def z(self) -> float:
        return abs(self.value) / self.mc_se if self.mc_se > 0 else (0.0 if self.value == 0 else math.inf)


def mean_and_se(terms: np.ndarray) -> Estimate:
    """Chunked mean with compensated summation across chunks."""
    terms = np.asarray(terms, dtype=float)
    n = terms.shape[0]
    sums = [float(np.sum(terms[i:i + CHUNK])) for i in range(0, n, CHUNK)]
    mean = math.fsum(sums) / n
    ss = math.fsum(float(np.sum((terms[i:i + CHUNK] - mean) ** 2)) for i in range(0, n, CHUNK))
    se = math.sqrt(ss / (n - 1) / n) if n > 1 else math.nan
    return Estimate(mean, se)


def eval_moment(spec, params: OrthoParams, sample: OrthoSample) -> Estimate:
    return mean_and_se(moment_terms(spec, params, sample))


def verdict(est: Estimate) -> str:
    z = est.z()
    if z < ORTHOGONAL_SE:
        return "orthogonal"
    if z > NOT_ORTHOGONAL_SE:
        return "not-orthogonal"
    return "inconclusive"


@dataclass
class OrthoEntry:
    moment: str
    nuisance: str
    estimate: Estimate
    verdict: str
    detail: dict = field(default_factory=dict)


def derivative_check(spec, params: OrthoParams, sample: OrthoSample, nuisance: str, h: float = 1e-4) -> OrthoEntry:
    """Central difference of the moment in one nuisance direction, common random numbers."""
    if not 1e-6 <= h <= 1e-2:
        raise ValueError(f"h must lie in [1e-6, 1e-2], got {h}")
    if nuisance not in NUISANCES:
        raise ValueError(f"nuisance must be one of {NUISANCES}, got {nuisance!r}")
    spec = spec if isinstance(spec, MomentSpec) else MomentSpec.of(spec)
    up = moment_terms(spec, params.shifted(nuisance, h), sample)
    down = moment_terms(spec, params.shifted(nuisance, -h), sample)
    est = mean_and_se((up - down) / (2.0 * h))
    return OrthoEntry(spec.id.value, nuisance, est, verdict(est))


@dataclass
class OrthoReport:
    entries: list = field(default_factory=list)

    def add(self, entry: OrthoEntry) -> None:
        self.entries.append(entry)

    def get(self, moment: str, nuisance: str) -> OrthoEntry:
        for e in self.entries:
            if e.moment == moment and e.nuisance == nuisance:
                return e
        raise KeyError((moment, nuisance))

    def to_text(self) -> str:
        lines = [f"{'moment':<14}{'target':<10}{'estimate':>12}{'mc_se':>12}{'|z|':>8}  verdict"]
        for e in self.entries:
            lines.append(f"{e.moment:<14}{e.nuisance:<10}{e.estimate.value:>12.3e}{e.estimate.mc_se:>12.3e}"
                         f"{e.estimate.z():>8.2f}  {e.verdict}")
        return "\n".join(lines) + "\n"


def full_report(sample: OrthoSample, h: float = 1e-4) -> OrthoReport:
    """Value and nuisance derivatives of every moment at the sample's truth.

    ``A''`` is evaluated with ``delta`` at a first-step value away from the
    truth (``delta0 + 0.5``), which is how that moment is used.
    """
    dgp = sample.dgp
    rep = OrthoReport()
    configs = [
        (Moment.A, dgp.truth()),
        (Moment.ADOUBLEPRIME, dgp.truth().shifted("delta", 0.5)),
        (Moment.ASTAR_COLS, dgp.starred_truth()),
        (Moment.ASTAR_MLE, dgp.starred_truth()),
        (Moment.BSTAR, dgp.starred_truth()),
    ]
    for mid, params in configs:
        est = eval_moment(mid, params, sample)
        rep.add(OrthoEntry(mid.value, "value", est, "valid" if est.z() < ORTHOGONAL_SE else "invalid"))
        for nu in NUISANCES:
            rep.add(derivative_check(mid, params, sample, nu, h))
    rep.add(check_rho_orthogonality(sample, dgp.starred_truth(), demean_z=True))
    return rep


def rho_condition_terms(sample: OrthoSample, params: OrthoParams, demean_z: bool) -> np.ndarray:
    """``z r* (1 - rho eps* (rho eps* - r*))`` per observation."""
    s = sample.demeaned() if demean_z else sample
    _, e = _eps_star(params, s)
    r = mills(params.rho * e)
    return s.z * r * (1.0 - params.rho * e * (params.rho * e - r))


@dataclass(frozen=True)
class CrossMoments:
    mean_r: float
    mu12: float  # E eps* r*^2
    mu21: float  # E eps*^2 r*


def cross_moments(dgp: OrthoDGP, n: int = 10_000_000, seed: int = 0) -> CrossMoments:
    """``E r*``, ``mu12`` and ``mu21`` of the composite error by simulation, in chunks."""
    rng = np.random.default_rng(seed)
    rho = dgp.rho
    acc = {"r": [], "12": [], "21": []}
    done = 0
    while done < n:
        m = min(1 << 20, n - done)
        e = rng.normal(0.0, dgp.sigma_v, m) - np.abs(rng.normal(0.0, dgp.sigma_u, m))
        r = mills(rho * e)
        acc["r"].append(float(np.sum(r)))
        acc["12"].append(float(np.sum(e * r * r)))
        acc["21"].append(float(np.sum(e * e * r)))
        done += m
    return CrossMoments(math.fsum(acc["r"]) / n, math.fsum(acc["12"]) / n, math.fsum(acc["21"]) / n)


def check_rho_orthogonality(sample: OrthoSample, params: OrthoParams, demean_z: bool = True,
                            moments: CrossMoments | None = None) -> OrthoEntry:
    """Sample analogue of ``E z r* (1 - rho eps* (rho eps* - r*))``.

    Without demeaning, ``detail`` holds the decomposition
    ``E z r* + rho (mu12 - rho mu21) E z`` with the cross moments taken from
    ``moments`` when supplied and from the sample otherwise.
    """
    est = mean_and_se(rho_condition_terms(sample, params, demean_z))
    entry = OrthoEntry("rho_condition", "demeaned" if demean_z else "raw", est, verdict(est))
    if not demean_z:
        _, e = _eps_star(params, sample)
        r = mills(params.rho * e)
        if moments is None:
            moments = CrossMoments(float(r.mean()), float(np.mean(e * r * r)), float(np.mean(e * e * r)))
        ez = float(sample.z.mean())
        residual = params.rho * (moments.mu12 - params.rho * moments.mu21) * ez
        entry.detail = {"E_zr": float(np.mean(sample.z * r)), "E_z": ez, "mu12": moments.mu12,
                        "mu21": moments.mu21, "residual_term": residual,
                        "decomposition": float(np.mean(sample.z * r)) + residual}
    return entry


@dataclass
class HomoskewnessReport:
    pooled_mu21: Estimate
    pooled_mu12: Estimate
    bin_mu21: list
    bin_mu12: list
    deviation: float  # largest |bin - pooled| in units of its MC standard error
    verdict: str


def homoskewness_probe(sample: OrthoSample, params: OrthoParams, bins: int = 4, by: str = "z",
                       min_count: int = 100) -> HomoskewnessReport:
    """Compare ``E eps*^2 r*`` and ``E eps* r*^2`` across quantile bins of a covariate."""
    _, e = _eps_star(params, sample)
    r = mills(params.rho * e)
    t21, t12 = e * e * r, e * r * r
    cov = getattr(sample, by)
    if bins < 1:
        raise ValueError("bins must be positive")
    edges = np.quantile(cov, np.linspace(0, 1, bins + 1))
    label = np.clip(np.searchsorted(edges, cov, side="right") - 1, 0, bins - 1)
    counts = np.bincount(label, minlength=bins)
    if counts.min() < min_count:
        raise TooFewBins(f"smallest bin has {counts.min()} observations; need {min_count}")
    pooled21, pooled12 = mean_and_se(t21), mean_and_se(t12)
    b21 = [mean_and_se(t21[label == k]) for k in range(bins)]
    b12 = [mean_and_se(t12[label == k]) for k in range(bins)]
    dev = 0.0
    if bins > 1:
        for pooled, per_bin in ((pooled21, b21), (pooled12, b12)):
            for b in per_bin:
                # the bin is part of the pool: var(bin - pool) = se_b^2 - se_pool^2
                se = math.sqrt(max(b.mc_se ** 2 - pooled.mc_se ** 2, 0.0))
                dev = max(dev, abs(b.value - pooled.value) / se if se > 0 else 0.0)
    v = "homoskewed" if dev < ORTHOGONAL_SE else ("heteroskewed" if dev > NOT_ORTHOGONAL_SE else "inconclusive")
    return HomoskewnessReport(pooled21, pooled12, b21, b12, dev, v)
