"""Maximum-entropy synthesizer over a fully enumerable discrete domain.

The released statistic is a vector of noisy marginal-query counts. The
posterior over the max-entropy parameters uses a Gaussian (CLT) approximation
of the count likelihood convolved with the Gaussian-mechanism noise, and is
sampled with HMC. Synthetic data come from the posterior predictive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from synmix.dp import PrivateSummary
from synmix.hmc import run_hmc_chain
from synmix.mixing import SyntheticCollection
from synmix.stats_core import RngStream, as_generator

MAX_CELLS = 4096
COV_JITTER = 1e-9


@dataclass(frozen=True)
class DiscreteDomain:
    arities: tuple[int, ...]

    def __post_init__(self):
        arities = tuple(int(a) for a in self.arities)
        if not arities or min(arities) < 1:
            raise ValueError("arities must be positive integers")
        if math.prod(arities) > MAX_CELLS:
            raise ValueError(f"domain has more than {MAX_CELLS} cells")
        object.__setattr__(self, "arities", arities)

    @property
    def n_cells(self) -> int:
        return math.prod(self.arities)

    @cached_property
    def cells(self) -> np.ndarray:
        """Row-major enumeration of all cells, shape (n_cells, n_variables)."""
        return np.array(list(itertools.product(*(range(a) for a in self.arities))), dtype=int)

    def cell_index(self, records) -> np.ndarray:
        return np.ravel_multi_index(np.asarray(records, dtype=int).T, self.arities)


@dataclass(frozen=True, eq=False)
class QueryModel:
    """Query matrix over cells; the last query's parameter is pinned to zero."""

    domain: DiscreteDomain
    queries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.queries, dtype=float)
        if a.shape[0] != self.domain.n_cells:
            raise ValueError("query matrix needs one row per cell")
        object.__setattr__(self, "queries", a)

    @classmethod
    def full_one_hot(cls, domain: DiscreteDomain) -> "QueryModel":
        return cls(domain, np.eye(domain.n_cells))

    @property
    def n_queries(self) -> int:
        return self.queries.shape[1]

    @property
    def dim(self) -> int:
        return self.n_queries - 1

    @property
    def is_one_hot(self) -> bool:
        a = self.queries
        return a.shape[0] == a.shape[1] and np.array_equal(a, np.eye(a.shape[0]))

    def full_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] == self.n_queries:
            return theta
        if theta.shape[-1] != self.dim:
            raise ValueError(f"theta must have length {self.dim} or {self.n_queries}")
        pad = np.zeros(theta.shape[:-1] + (1,))
        return np.concatenate([theta, pad], axis=-1)

    def logits(self, theta) -> np.ndarray:
        return self.full_theta(theta) @ self.queries.T


def med_log_probs(qm: QueryModel, theta) -> np.ndarray:
    eta = qm.logits(theta)
    return eta - logsumexp(eta, axis=-1, keepdims=True)


def med_cell_probs(qm: QueryModel, theta) -> np.ndarray:
    """Cell probabilities ``exp(theta . a(x) - log Z(theta))``."""
    return np.exp(med_log_probs(qm, theta))


def med_query_moments(qm: QueryModel, theta) -> tuple[np.ndarray, np.ndarray]:
    """Exact mean and covariance of the query vector ``a(x)`` under the MED."""
    p = med_cell_probs(qm, theta)
    a = qm.queries
    mu = a.T @ p
    sigma = (a.T * p) @ a - np.outer(mu, mu)
    return mu, sigma


def noisy_count_log_density(qm: QueryModel, theta, noisy, n: int, noise_variance: float, prior_scale: float):
    """Log posterior (up to a constant) and gradient for the CLT count likelihood.

    ``noisy ~ N(n mu(theta), n Sigma(theta) + noise_variance I)`` with prior
    ``theta ~ N(0, prior_scale^2 I)`` on the free coordinates.
    """
    a = qm.queries
    theta = np.asarray(theta, dtype=float)
    p = med_cell_probs(qm, theta)
    mu = a.T @ p
    cov = n * ((a.T * p) @ a - np.outer(mu, mu))
    cov[np.diag_indices_from(cov)] += noise_variance + COV_JITTER
    chol = np.linalg.cholesky(cov)
    chol_inv = np.linalg.inv(chol)
    cov_inv = chol_inv.T @ chol_inv
    resid = noisy - n * mu
    alpha = cov_inv @ resid
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    value = -0.5 * logdet - 0.5 * resid @ alpha - 0.5 * (theta @ theta) / prior_scale**2

    g_mat = 0.5 * (np.outer(alpha, alpha) - cov_inv)
    g_mu = g_mat @ mu
    # d value / d p_x, then through the softmax Jacobian and the query map
    g_cell = n * (np.einsum("xi,ij,xj->x", a, g_mat, a) - 2.0 * a @ g_mu + a @ alpha)
    g_logit = p * (g_cell - p @ g_cell)
    grad = (a.T @ g_logit)[: qm.dim] - theta / prior_scale**2
    return float(value), grad


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup: int = 200
    draws: int = 500
    path_length: float = 1.5
    target_accept: float = 0.8
    min_accept: float = 0.2


@dataclass(eq=False)
class NapsuPosterior:
    draws: np.ndarray
    chain_ids: np.ndarray
    qm: QueryModel
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.draws.size == 0 or not np.all(np.isfinite(self.draws)):
            raise ValueError("posterior draws must be non-empty and finite")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    def cell_probs(self) -> np.ndarray:
        return med_cell_probs(self.qm, self.draws)


def _initial_theta(qm: QueryModel, noisy, gen) -> np.ndarray:
    jitter = 0.1 * gen.standard_normal(qm.dim)
    if qm.is_one_hot:
        counts = np.maximum(np.asarray(noisy, dtype=float), 1.0)
        return np.log(counts[:-1] / counts[-1]) + jitter
    return jitter


def napsu_fit(
    qm: QueryModel,
    summary: PrivateSummary,
    n: int,
    prior_scale: float = 10.0,
    config: SamplerConfig = SamplerConfig(),
    rng=0,
) -> NapsuPosterior:
    """Sample the noise-aware posterior of the MED parameters given noisy counts."""
    noisy = np.asarray(summary.values, dtype=float)
    if noisy.shape != (qm.n_queries,):
        raise ValueError(f"noisy summary has {noisy.size} values, query model has {qm.n_queries}")
    if n < 1:
        raise ValueError("n must be positive")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))

    def target(theta):
        return noisy_count_log_density(qm, theta, noisy, n, summary.noise_variance, prior_scale)

    draws, chain_ids, accepts, steps, leaps = [], [], [], [], []
    for c in range(config.chains):
        gen = stream.child(c).generator()
        res = run_hmc_chain(
            target,
            _initial_theta(qm, noisy, gen),
            config.warmup,
            config.draws,
            gen,
            path_length=config.path_length,
            target_accept=config.target_accept,
        )
        draws.append(res.draws)
        chain_ids.append(np.full(config.draws, c))
        accepts.append(res.accept_rate)
        steps.append(res.step_size)
        leaps.append(res.n_leapfrog)
    diagnostics = {
        "accept_rate": accepts,
        "step_size": steps,
        "n_leapfrog": leaps,
        "prior_scale": prior_scale,
        "n": n,
    }
    if min(accepts) < config.min_accept:
        raise RuntimeError(f"napsu_fit: acceptance rate below {config.min_accept}: {diagnostics}")
    return NapsuPosterior(np.concatenate(draws), np.concatenate(chain_ids), qm, diagnostics)


def sample_records(qm: QueryModel, theta, n_star: int, rng) -> np.ndarray:
    """``n_star`` i.i.d. cell indices from the MED at ``theta``."""
    p = med_cell_probs(qm, theta)
    counts = as_generator(rng).multinomial(n_star, p / p.sum())
    return np.repeat(np.arange(p.size), counts)


def synth_from_posterior(post: NapsuPosterior, m: int, n_star: int, rng) -> SyntheticCollection:
    """m posterior-predictive data sets, each from its own strided parameter draw.

    Records are cell indices into ``post.qm.domain.cells``.
    """
    if m < 1 or n_star < 1:
        raise ValueError("m and n_star must be positive")
    if m > post.n_draws:
        raise ValueError(f"m={m} exceeds the {post.n_draws} available posterior draws")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    picks = (np.arange(m) * post.n_draws) // m
    datasets = []
    for i, idx in enumerate(picks):
        gen = stream.child(i).generator()
        records = sample_records(post.qm, post.draws[idx], n_star, gen)
        datasets.append(gen.permutation(records))
    return SyntheticCollection(datasets, "maxent-posterior-predictive", stream, {"draw_indices": picks.tolist()})
