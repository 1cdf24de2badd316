"""Mixing downstream posteriors over multiple synthetic data sets.

The analyst's posterior is approximated by the uniform mixture of the
posteriors fitted independently on each synthetic data set. Densities are
mixed analytically from the per-dataset parametric posteriors; pooled draws
serve quantile-based summaries.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from synmix import conjugate
from synmix.stats_core import (
    GaussianDist,
    GridDensity,
    RngStream,
    sample_gaussian,
    sample_scaled_inv_chi2,
    sample_student_t,
)

DEFAULT_SAMPLES_PER_DATASET = 250


class MixingError(RuntimeError):
    pass


class CorrectionInfeasible(ValueError):
    pass


def _dataset_size(ds) -> int:
    if isinstance(ds, conjugate.DataSummary):
        return ds.n
    return len(ds)


@dataclass(eq=False)
class SyntheticCollection:
    datasets: list
    generator_tag: str
    rng: RngStream | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.datasets) < 1:
            raise ValueError("a collection needs at least one data set")
        sizes = {_dataset_size(d) for d in self.datasets}
        if len(sizes) != 1:
            raise ValueError(f"all data sets must have the same size, got {sorted(sizes)}")

    @property
    def m(self) -> int:
        return len(self.datasets)

    @property
    def n_star(self) -> int:
        return _dataset_size(self.datasets[0])

    def __len__(self):
        return self.m

    def __iter__(self):
        return iter(self.datasets)

    def permuted(self, order: Sequence[int]) -> "SyntheticCollection":
        return SyntheticCollection([self.datasets[i] for i in order], self.generator_tag, self.rng, dict(self.meta))


Generator = Callable[[int, np.random.Generator], Any]


def generate_collection(generator: Generator, m: int, n_star: int, rng, tag: str = "") -> SyntheticCollection:
    """Draw ``m`` independent data sets of size ``n_star`` from ``generator``.

    ``generator(n_star, gen)`` returns one data set. Data set ``i`` uses
    substream ``i`` of ``rng`` so results do not depend on evaluation order.
    """
    if m < 1 or n_star < 1:
        raise ValueError("m and n_star must be positive")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    datasets = [generator(n_star, stream.child(i).generator()) for i in range(m)]
    return SyntheticCollection(datasets, tag or getattr(generator, "__name__", "generator"), stream)


def conjugate_generator(model: conjugate.GaussianModel, post, raw: bool = False) -> Generator:
    """Posterior-predictive generator for a conjugate Gaussian data provider.

    With ``raw=False`` each data set is represented by its sufficient
    statistics, drawn exactly.
    """
    sampler = conjugate.posterior_predictive_sample if raw else conjugate.posterior_predictive_summary

    def generate(n_star, gen):
        return sampler(model, post, n_star, gen)

    generate.__name__ = f"{type(model).__name__}-predictive"
    return generate


class ConjugateAnalyzer:
    """Downstream conjugate Gaussian analysis of one univariate data set.

    For the normal-inverse-chi-squared model the quantity of interest is the
    mean, so components are its Student-t marginal.
    """

    name = "conjugate-gaussian"

    def __init__(self, model: conjugate.GaussianModel):
        self.model = model

    def _summary(self, dataset) -> conjugate.DataSummary:
        if isinstance(dataset, conjugate.DataSummary):
            return dataset
        known_mean = self.model.known_mean if isinstance(self.model, conjugate.KnownMeanModel) else None
        return conjugate.DataSummary.from_data(dataset, known_mean)

    def fit(self, dataset):
        post = conjugate.posterior(self.model, self._summary(dataset))
        if isinstance(post, conjugate.NixPosterior):
            return post.mean_marginal()
        return post

    def marginal(self, post, coord: int = 0):
        return post

    def sample(self, post, k: int, gen: np.random.Generator) -> np.ndarray:
        if isinstance(post, GaussianDist):
            return sample_gaussian(post, k, gen)
        if isinstance(post, conjugate.ScaledInvChiSq):
            return sample_scaled_inv_chi2(post, k, gen)
        return sample_student_t(post, k, gen)


@dataclass(eq=False)
class MixturePosterior:
    components: list
    samples: np.ndarray
    analyzer: Any
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.components) != self.samples.shape[0]:
            raise ValueError("one sample block per component is required")

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def k(self) -> int:
        return self.samples.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.m, 1.0 / self.m)

    def pooled(self, coord: int | None = None) -> np.ndarray:
        flat = self.samples.reshape((-1,) + self.samples.shape[2:])
        if coord is None or flat.ndim == 1:
            return flat
        return flat[:, coord]

    def marginals(self, coord: int = 0) -> list:
        return [self.analyzer.marginal(c, coord) for c in self.components]

    def component_means(self, coord: int = 0) -> np.ndarray:
        return np.array([c.mean for c in self.marginals(coord)])

    def component_variances(self, coord: int = 0) -> np.ndarray:
        return np.array([c.variance for c in self.marginals(coord)])

    def mean(self, coord: int = 0) -> float:
        return float(self.component_means(coord).mean())

    def expected_component_variance(self, coord: int = 0) -> float:
        """Average per-dataset posterior variance, the E(sigma_hat^2) term."""
        return float(self.component_variances(coord).mean())

    def variance(self, coord: int = 0) -> float:
        """Mixture variance by the law of total variance."""
        return self.expected_component_variance(coord) + float(self.component_means(coord).var())

    def pdf(self, x, coord: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        comps = self.marginals(coord)
        if len(comps) == 1:
            return comps[0].pdf(x)
        if all(isinstance(c, GaussianDist) for c in comps):
            return _gaussian_mixture_pdf(x, np.array([c.mean for c in comps]), np.array([c.sd for c in comps]))
        total = np.zeros_like(x)
        for comp in comps:
            total += comp.pdf(x)
        return total / self.m


def _gaussian_mixture_pdf(x, means, sds, chunk: int = 256) -> np.ndarray:
    flat = x.ravel()
    total = np.zeros_like(flat)
    for start in range(0, means.size, chunk):
        mu = means[start : start + chunk, None]
        sd = sds[start : start + chunk, None]
        z = (flat[None, :] - mu) / sd
        total += np.sum(np.exp(-0.5 * z * z) / (sd * np.sqrt(2 * np.pi)), axis=0)
    return (total / means.size).reshape(x.shape)


def mix_posteriors(collection: SyntheticCollection, analyzer, k: int = DEFAULT_SAMPLES_PER_DATASET, rng=0) -> MixturePosterior:
    """Fit ``analyzer`` on every data set and pool ``k`` draws from each posterior."""
    if k < 1:
        raise ValueError("k must be positive")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    components, blocks = [], []
    for i, ds in enumerate(collection.datasets):
        try:
            post = analyzer.fit(ds)
            draws = analyzer.sample(post, k, stream.child(i).generator())
        except Exception as exc:
            raise MixingError(f"downstream analysis failed on dataset {i}: {exc}") from exc
        components.append(post)
        blocks.append(np.asarray(draws, dtype=float))
    meta = {"m": collection.m, "n_star": collection.n_star, "k": k, "generator": collection.generator_tag}
    return MixturePosterior(components, np.stack(blocks), analyzer, meta)


def mixture_density(mix: MixturePosterior, grid, coord: int = 0) -> GridDensity:
    """Pointwise average of per-dataset densities on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    return GridDensity(grid, mix.pdf(grid, coord))


def variance_correction(mix_variance: float, expected_variance: float, c: float) -> float:
    """Rubin-style estimate of the real-data posterior variance.

    ``c`` is the synthetic-to-real size ratio n*/n.
    """
    if not c > 0:
        raise ValueError("c must be > 0")
    corrected = (mix_variance - expected_variance) / (1.0 + 1.0 / c)
    if not corrected > 0:
        raise CorrectionInfeasible("correction infeasible; increase m or n*")
    return corrected


def corrected_gaussian(mix: MixturePosterior, c: float, coord: int = 0) -> GaussianDist:
    var = variance_correction(mix.variance(coord), mix.expected_component_variance(coord), c)
    return GaussianDist(mix.mean(coord), var)


def mean_correction_known_mean(samples, provider_mean: float, analyst_mean: float) -> np.ndarray:
    """Remove the squared known-mean mismatch from variance draws."""
    shifted = np.asarray(samples, dtype=float) - (provider_mean - analyst_mean) ** 2
    negative = int(np.sum(shifted < 0))
    if negative:
        warnings.warn(f"{negative} corrected variance draws are negative", RuntimeWarning, stacklevel=2)
    return shifted


def credible_interval(mix: MixturePosterior | np.ndarray, level: float, coord: int | None = None) -> tuple[float, float]:
    """Equal-tailed interval from the pooled draws."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    draws = mix.pooled(coord) if isinstance(mix, MixturePosterior) else np.asarray(mix, dtype=float)
    if draws.ndim > 1:
        draws = draws[:, 0 if coord is None else coord]
    if draws.size == 0:
        raise ValueError("no pooled draws")
    tail = 0.5 * (1.0 - level)
    lo, hi = np.quantile(draws, [tail, 1.0 - tail])
    return float(lo), float(hi)
