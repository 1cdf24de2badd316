"""Random streams, small parametric distributions and 1-D distance utilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

GRID_POINTS = 4096
GRID_HALF_WIDTH_SD = 8.0


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Substreams for datasets or chains are derived with :meth:`child` so that
    per-item randomness does not depend on execution order.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence([int(self.seed), int(self.stream_id)])
        return np.random.Generator(np.random.Philox(seq))

    def child(self, index: int) -> "RngStream":
        # Mix the parent id and index into a fresh 64-bit id.
        mixed = np.random.SeedSequence([int(self.stream_id), int(index), 0x5EED])
        return RngStream(self.seed, int(mixed.generate_state(1, np.uint64)[0]))

    def children(self, count: int) -> list["RngStream"]:
        return [self.child(i) for i in range(count)]


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng)).generator()


@dataclass(frozen=True)
class GaussianDist:
    mean: float
    variance: float

    def __post_init__(self):
        if not (np.isfinite(self.variance) and self.variance > 0):
            raise ValueError(f"variance must be > 0, got {self.variance}")

    @property
    def sd(self) -> float:
        return float(np.sqrt(self.variance))

    def pdf(self, x):
        return stats.norm.pdf(x, self.mean, self.sd)

    def logpdf(self, x):
        return stats.norm.logpdf(x, self.mean, self.sd)

    def cdf(self, x):
        return stats.norm.cdf(x, self.mean, self.sd)


@dataclass(frozen=True)
class ScaledInvChiSq:
    """Scaled inverse chi-squared, i.e. Inv-Gamma(dof/2, dof*scale/2)."""

    dof: float
    scale: float

    def __post_init__(self):
        if not self.dof > 0:
            raise ValueError(f"dof must be > 0, got {self.dof}")
        if not self.scale > 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")

    @property
    def mean(self) -> float:
        if self.dof <= 2:
            raise ValueError("mean is undefined for dof <= 2")
        return self.dof / (self.dof - 2) * self.scale

    @property
    def variance(self) -> float:
        if self.dof <= 4:
            raise ValueError("variance is undefined for dof <= 4")
        nu = self.dof
        return 2 * nu**2 / ((nu - 2) ** 2 * (nu - 4)) * self.scale**2

    def _frozen(self):
        return stats.invgamma(self.dof / 2, scale=self.dof * self.scale / 2)

    def pdf(self, x):
        return self._frozen().pdf(x)

    def logpdf(self, x):
        return self._frozen().logpdf(x)

    def cdf(self, x):
        return self._frozen().cdf(x)


@dataclass(frozen=True)
class StudentT:
    dof: float
    loc: float
    scale2: float

    def __post_init__(self):
        if not self.dof > 0:
            raise ValueError(f"dof must be > 0, got {self.dof}")
        if not self.scale2 > 0:
            raise ValueError(f"scale2 must be > 0, got {self.scale2}")

    @property
    def variance(self) -> float:
        if self.dof <= 2:
            raise ValueError("variance is undefined for dof <= 2")
        return self.scale2 * self.dof / (self.dof - 2)

    @property
    def mean(self) -> float:
        return self.loc

    def pdf(self, x):
        return stats.t.pdf(x, self.dof, self.loc, np.sqrt(self.scale2))

    def logpdf(self, x):
        return stats.t.logpdf(x, self.dof, self.loc, np.sqrt(self.scale2))

    def cdf(self, x):
        return stats.t.cdf(x, self.dof, self.loc, np.sqrt(self.scale2))


@dataclass(frozen=True, eq=False)
class GridDensity:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least 2 points")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite and non-negative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_pdf(cls, dist, grid) -> "GridDensity":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, dist.pdf(grid))

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def normalized(self) -> "GridDensity":
        return GridDensity(self.grid, self.values / self.integral())

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.values, self.grid) / self.integral())


def sample_gaussian(dist: GaussianDist, count: int, rng) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    return as_generator(rng).normal(dist.mean, dist.sd, size=count)


def sample_scaled_inv_chi2(dist: ScaledInvChiSq, count: int, rng) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    gen = as_generator(rng)
    shape = dist.dof / 2
    rate = dist.dof * dist.scale / 2
    return rate / gen.standard_gamma(shape, size=count)


def sample_student_t(dist: StudentT, count: int, rng) -> np.ndarray:
    gen = as_generator(rng)
    return dist.loc + np.sqrt(dist.scale2) * gen.standard_t(dist.dof, size=count)


def default_grid(*dists, points: int = GRID_POINTS, half_width: float = GRID_HALF_WIDTH_SD) -> np.ndarray:
    """Symmetric grid covering every distribution's mean +/- ``half_width`` pooled sds.

    Each argument needs ``mean`` and ``variance`` (or ``(mean, variance)`` tuples).
    """
    means, variances = [], []
    for d in dists:
        if isinstance(d, tuple):
            m, v = d
        else:
            m, v = d.mean, d.variance
        means.append(float(m))
        variances.append(float(v))
    pooled_sd = float(np.sqrt(np.mean(variances) + np.var(means)))
    center = 0.5 * (min(means) + max(means))
    half = 0.5 * (max(means) - min(means)) + half_width * pooled_sd
    return np.linspace(center - half, center + half, points)


def tv_distance_grid(p: GridDensity, q: GridDensity) -> float:
    """Trapezoid estimate of half the L1 distance between two grid densities."""
    if p.grid.shape != q.grid.shape or not np.array_equal(p.grid, q.grid):
        raise ValueError("densities must share the same grid")
    tv = 0.5 * np.trapezoid(np.abs(p.values - q.values), p.grid)
    return float(min(max(tv, 0.0), 1.0))


def kl_gaussian(p: GaussianDist, q: GaussianDist) -> float:
    ratio = p.variance / q.variance
    kl = 0.5 * (ratio - 1.0 - np.log(ratio) + (p.mean - q.mean) ** 2 / q.variance)
    return float(max(kl, 0.0))


def normal_cdf(x):
    """Standard normal CDF through the complementary error function."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / np.sqrt(2.0))
