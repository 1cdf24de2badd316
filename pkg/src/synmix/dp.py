"""Gaussian mechanism and analytic (epsilon, delta) noise calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from synmix.stats_core import as_generator, normal_cdf

DEFAULT_SENSITIVITY = math.sqrt(2.0)


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float
    sensitivity: float = DEFAULT_SENSITIVITY

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.sensitivity > 0:
            raise ValueError("sensitivity must be > 0")


@dataclass(frozen=True, eq=False)
class PrivateSummary:
    values: np.ndarray
    noise_variance: float
    params: PrivacyParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be > 0")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.noise_variance)


def privacy_delta(epsilon: float, sigma: float, sensitivity: float) -> float:
    """Tight delta of the Gaussian mechanism with noise sd ``sigma``."""
    a = sensitivity / (2 * sigma)
    b = epsilon * sigma / sensitivity
    first = normal_cdf(a - b)
    second = normal_cdf(-a - b)
    # e^eps * Phi(.) can overflow for large eps while the product stays tiny
    if second > 0:
        second = math.exp(epsilon + math.log(second))
    return float(first - second)


def calibrate_sigma(params: PrivacyParams, rtol: float = 1e-9, max_steps: int = 200) -> float:
    """Smallest noise sd meeting ``params`` under the analytic Gaussian mechanism.

    Bisection on sigma; ``privacy_delta`` is decreasing in sigma. The returned
    value is the upper bracket, so it always satisfies the delta bound.
    """
    eps, delta, sens = params.epsilon, params.delta, params.sensitivity
    lo, hi = 0.0, sens
    steps = 0
    while privacy_delta(eps, hi, sens) > delta:
        lo, hi = hi, 2 * hi
        steps += 1
        if steps > max_steps:
            raise RuntimeError("calibrate_sigma: failed to bracket sigma")
    for _ in range(max_steps):
        if hi - lo <= rtol * hi:
            return hi
        mid = 0.5 * (lo + hi)
        if privacy_delta(eps, mid, sens) > delta:
            lo = mid
        else:
            hi = mid
    raise RuntimeError(f"calibrate_sigma: no convergence after {max_steps} bisection steps")


def gaussian_mechanism(values, sigma: float, rng, params: PrivacyParams | None = None) -> PrivateSummary:
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    values = np.asarray(values, dtype=float)
    noisy = values + as_generator(rng).normal(0.0, sigma, size=values.shape)
    return PrivateSummary(noisy, sigma**2, params)


def release_counts(counts, params: PrivacyParams, rng) -> PrivateSummary:
    """Calibrate to ``params`` and release ``counts`` through the Gaussian mechanism."""
    return gaussian_mechanism(counts, calibrate_sigma(params), rng, params)
