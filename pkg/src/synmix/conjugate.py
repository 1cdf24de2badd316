"""Conjugate updates and posterior-predictive samplers for univariate Gaussian models.

Three variants are covered: unknown mean with known variance, unknown mean and
variance (normal-inverse-chi-squared), and unknown variance with known mean.
Parameters are kept in natural (mean, variance) space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from synmix.stats_core import (
    GaussianDist,
    ScaledInvChiSq,
    StudentT,
    as_generator,
    sample_scaled_inv_chi2,
)


@dataclass(frozen=True)
class DataSummary:
    """Sufficient statistics of a univariate sample.

    ``s2`` uses the ``n - 1`` denominator (0 when ``n < 2``); ``v`` is the mean
    squared deviation from ``center``, the known mean it was computed against.
    """

    n: int
    mean: float = 0.0
    s2: float = 0.0
    v: float | None = None
    center: float | None = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.s2 < 0 or (self.v is not None and self.v < 0):
            raise ValueError("second moments must be non-negative")

    @classmethod
    def from_data(cls, x, known_mean: float | None = None) -> "DataSummary":
        x = np.asarray(x, dtype=float).ravel()
        n = x.size
        if n == 0:
            return cls(0, center=known_mean, v=None if known_mean is None else 0.0)
        mean = float(x.mean())
        s2 = float(x.var(ddof=1)) if n > 1 else 0.0
        v = None if known_mean is None else float(np.mean((x - known_mean) ** 2))
        return cls(n, mean, s2, v, known_mean)

    def recentered(self, known_mean: float) -> "DataSummary":
        """Same sample, with ``v`` measured against a different known mean."""
        if self.n == 0:
            return DataSummary(0, center=known_mean, v=0.0)
        ss = (self.n - 1) * self.s2 + self.n * (self.mean - known_mean) ** 2
        return DataSummary(self.n, self.mean, self.s2, ss / self.n, known_mean)


@dataclass(frozen=True)
class KnownVarModel:
    prior: GaussianDist
    known_variance: float

    def __post_init__(self):
        if not self.known_variance > 0:
            raise ValueError("known_variance must be > 0")


@dataclass(frozen=True)
class NixModel:
    mu0: float
    kappa0: float
    nu0: float
    sigma2_0: float

    def __post_init__(self):
        if min(self.kappa0, self.nu0, self.sigma2_0) <= 0:
            raise ValueError("kappa0, nu0 and sigma2_0 must be > 0")


@dataclass(frozen=True)
class NixPosterior:
    mu: float
    kappa: float
    nu: float
    sigma2: float

    def variance_marginal(self) -> ScaledInvChiSq:
        return ScaledInvChiSq(self.nu, self.sigma2)

    def mean_marginal(self) -> StudentT:
        return StudentT(self.nu, self.mu, self.sigma2 / self.kappa)

    def logpdf(self, mu, sigma2):
        """Joint log density of (mu, sigma2)."""
        mu = np.asarray(mu, dtype=float)
        sigma2 = np.asarray(sigma2, dtype=float)
        return self.variance_marginal().logpdf(sigma2) + (
            -0.5 * np.log(2 * np.pi * sigma2 / self.kappa)
            - 0.5 * self.kappa * (mu - self.mu) ** 2 / sigma2
        )


@dataclass(frozen=True)
class KnownMeanModel:
    prior: ScaledInvChiSq
    known_mean: float


GaussianModel = KnownVarModel | NixModel | KnownMeanModel


def posterior_known_variance(model: KnownVarModel, summary: DataSummary) -> GaussianDist:
    if summary.n == 0:
        return model.prior
    precision = 1.0 / model.prior.variance + summary.n / model.known_variance
    variance = 1.0 / precision
    mean = (model.prior.mean / model.prior.variance + summary.n * summary.mean / model.known_variance) * variance
    return GaussianDist(mean, variance)


def posterior_nix(model: NixModel, summary: DataSummary) -> NixPosterior:
    n = summary.n
    if n == 0:
        return NixPosterior(model.mu0, model.kappa0, model.nu0, model.sigma2_0)
    kappa = model.kappa0 + n
    nu = model.nu0 + n
    mu = (model.kappa0 * model.mu0 + n * summary.mean) / kappa
    # (n - 1) s^2 vanishes at n = 1
    scatter = (n - 1) * summary.s2 if n > 1 else 0.0
    nu_sigma2 = model.nu0 * model.sigma2_0 + scatter + model.kappa0 * n * (summary.mean - model.mu0) ** 2 / kappa
    return NixPosterior(mu, kappa, nu, nu_sigma2 / nu)


def posterior_known_mean(model: KnownMeanModel, summary: DataSummary) -> ScaledInvChiSq:
    if summary.n == 0:
        return model.prior
    if summary.center is None or summary.v is None or summary.center != model.known_mean:
        summary = summary.recentered(model.known_mean)
    nu0, s0 = model.prior.dof, model.prior.scale
    nu = nu0 + summary.n
    return ScaledInvChiSq(nu, (nu0 * s0 + summary.n * summary.v) / nu)


def posterior(model: GaussianModel, summary: DataSummary):
    """Dispatch to the conjugate update matching ``model``."""
    if isinstance(model, KnownVarModel):
        return posterior_known_variance(model, summary)
    if isinstance(model, NixModel):
        return posterior_nix(model, summary)
    if isinstance(model, KnownMeanModel):
        return posterior_known_mean(model, summary)
    raise TypeError(f"unsupported model {type(model).__name__}")


def _draw_parameters(model: GaussianModel, post, gen: np.random.Generator, size=None):
    """Draw (mean, variance) of the data-generating Gaussian from the posterior."""
    if isinstance(model, KnownVarModel):
        mu = gen.normal(post.mean, post.sd, size=size)
        return mu, np.broadcast_to(model.known_variance, np.shape(mu)).astype(float)
    if isinstance(model, NixModel):
        count = 1 if size is None else size
        sigma2 = sample_scaled_inv_chi2(post.variance_marginal(), count, gen)
        mu = gen.normal(post.mu, np.sqrt(sigma2 / post.kappa))
        if size is None:
            return float(mu[0]), float(sigma2[0])
        return mu, sigma2
    if isinstance(model, KnownMeanModel):
        count = 1 if size is None else size
        sigma2 = sample_scaled_inv_chi2(post, count, gen)
        mu = np.full(count, float(model.known_mean))
        if size is None:
            return float(mu[0]), float(sigma2[0])
        return mu, sigma2
    raise TypeError(f"unsupported model {type(model).__name__}")


def posterior_predictive_sample(model: GaussianModel, post, n_star: int, rng) -> np.ndarray:
    """One synthetic data set of ``n_star`` points from the posterior predictive.

    A single parameter draw is taken from ``post`` and all points are sampled
    i.i.d. from the likelihood at that parameter.
    """
    if n_star < 1:
        raise ValueError("n_star must be >= 1")
    gen = as_generator(rng)
    mu, sigma2 = _draw_parameters(model, post, gen)
    return gen.normal(float(mu), float(np.sqrt(sigma2)), size=n_star)


def posterior_predictive_summary(model: GaussianModel, post, n_star: int, rng) -> DataSummary:
    """Sufficient statistics of one posterior-predictive data set, drawn exactly.

    Equivalent in distribution to ``DataSummary.from_data`` applied to
    :func:`posterior_predictive_sample`, at O(1) cost: the sample mean is
    Gaussian and the scatter is an independent scaled chi-squared.
    """
    if n_star < 1:
        raise ValueError("n_star must be >= 1")
    gen = as_generator(rng)
    mu, sigma2 = _draw_parameters(model, post, gen)
    mean = gen.normal(float(mu), float(np.sqrt(sigma2 / n_star)))
    s2 = float(sigma2) * gen.chisquare(n_star - 1) / (n_star - 1) if n_star > 1 else 0.0
    center = model.known_mean if isinstance(model, KnownMeanModel) else None
    summary = DataSummary(n_star, float(mean), float(s2))
    return summary.recentered(center) if center is not None else summary
