"""Exact-posterior baseline for fully one-hot queries: Metropolis-within-Gibbs over (counts, theta).

The sampler alternates an HMC update of the max-entropy parameters given the
true cell counts (exact multinomial likelihood) with a Metropolis update of the
counts given the parameters and the noisy release. Data sets are rebuilt from
sampled counts. All chains advance in lockstep as stacked arrays.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln

from synmix.dp import PrivateSummary
from synmix.maxent import QueryModel
from synmix.stats_core import RngStream, as_generator


@dataclass(frozen=True)
class CountVector:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.round(counts)):
                raise ValueError("counts must be integers")
            counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MwgConfig:
    hmc_step: float = 0.05
    hmc_leapfrog_steps: int = 20
    count_move_repeats: int = 30
    total_samples: int = 20000
    chains: int = 4
    warmup_fraction: float = 0.2
    prior_scale: float = 10.0
    thin: int = 1
    min_accept: float = 0.05

    def __post_init__(self):
        for name in ("hmc_step", "hmc_leapfrog_steps", "count_move_repeats", "total_samples", "chains", "prior_scale", "thin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.warmup_fraction < 1:
            raise ValueError("warmup_fraction must lie in (0, 1)")

    @property
    def per_chain(self) -> int:
        return -(-self.total_samples // self.chains)

    @property
    def warmup_per_chain(self) -> int:
        return int(round(self.warmup_fraction * self.per_chain))


def round_to_counts(noisy, n: int) -> np.ndarray:
    """Deterministic integer, non-negative rounding of ``noisy`` summing to ``n``.

    Largest-remainder apportionment to total ``n``, then negatives are clamped
    to zero and the surplus is taken one unit at a time from the largest entries.
    """
    noisy = np.asarray(noisy, dtype=float)
    counts = np.floor(noisy).astype(np.int64)
    frac = noisy - counts
    gap = int(n - counts.sum())
    k = counts.size
    if gap:
        counts += gap // k
        rest = gap % k
        if rest:
            counts[np.argsort(-frac, kind="stable")[:rest]] += 1
    counts = np.maximum(counts, 0)
    surplus = int(counts.sum() - n)
    for _ in range(surplus):
        counts[np.argmax(counts)] -= 1
    return counts


def init_state(summary: PrivateSummary, n: int, dim: int, rng) -> tuple[np.ndarray, CountVector]:
    """Initial ``theta ~ N(0, I)`` and rounded counts."""
    gen = as_generator(rng)
    return gen.standard_normal(dim), CountVector(round_to_counts(summary.values, n))


def propose_counts(counts, repeats: int, rng) -> np.ndarray:
    """Apply ``repeats`` random (+1, -1) index pairs; entries may go negative.

    Works on a single vector or a stack of vectors (one per chain).
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    gen = as_generator(rng)
    counts = np.asarray(counts, dtype=np.int64)
    k = counts.shape[-1]
    batch = counts.shape[:-1]
    cells = np.arange(k)
    inc = gen.integers(0, k, size=batch + (repeats, 1))
    dec = gen.integers(0, k, size=batch + (repeats, 1))
    # only the final candidate is tested, so the order of moves is irrelevant
    delta = (inc == cells).sum(axis=-2) - (dec == cells).sum(axis=-2)
    return counts + delta


def _log_probs(theta):
    eta = np.concatenate([theta, np.zeros(theta.shape[:-1] + (1,))], axis=-1)
    eta -= eta.max(axis=-1, keepdims=True)
    return eta - np.log(np.exp(eta).sum(axis=-1, keepdims=True))


def _theta_target(theta, counts, n, prior_scale):
    logp = _log_probs(theta)
    value = np.sum(counts * logp, axis=-1) - 0.5 * np.sum(theta**2, axis=-1) / prior_scale**2
    grad = (counts - n * np.exp(logp))[..., :-1] - theta / prior_scale**2
    return value, grad


def _count_target(counts, logp, noisy, noise_variance):
    # multinomial (without the constant n!) times the Gaussian-mechanism likelihood
    return np.sum(counts * logp - gammaln(counts + 1.0), axis=-1) - 0.5 * np.sum((noisy - counts) ** 2, axis=-1) / noise_variance


@dataclass(eq=False)
class MwgChain:
    theta: np.ndarray
    counts: np.ndarray
    chain_ids: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.counts.shape[0]


def mwg_sample(summary: PrivateSummary, n: int, qm: QueryModel, cfg: MwgConfig = MwgConfig(), rng=0) -> MwgChain:
    """Sample p(counts, theta | noisy counts) with Metropolis-within-Gibbs."""
    if not qm.is_one_hot:
        raise ValueError("the exact sampler needs the full one-hot query set")
    noisy = np.asarray(summary.values, dtype=float)
    if noisy.shape != (qm.n_queries,):
        raise ValueError("noisy summary does not match the query model")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    dim = qm.dim
    chains = cfg.chains

    theta = np.empty((chains, dim))
    counts = np.empty((chains, qm.n_queries), dtype=np.int64)
    for c in range(chains):
        theta[c], cv = init_state(summary, n, dim, stream.child(c))
        counts[c] = cv.counts
    gen = stream.child(chains).generator()

    step, n_leap, tau = cfg.hmc_step, cfg.hmc_leapfrog_steps, cfg.prior_scale
    thin = cfg.thin
    warm = cfg.warmup_per_chain * thin
    kept = cfg.per_chain - cfg.warmup_per_chain
    total = warm + kept * thin
    theta_out = np.empty((chains, kept, dim))
    counts_out = np.empty((chains, kept, qm.n_queries), dtype=np.int64)
    theta_acc = np.zeros(chains)
    count_acc = np.zeros(chains)

    logp_t, grad = _theta_target(theta, counts, n, tau)
    for it in range(total):
        # theta | counts: HMC with identity mass
        mom = gen.standard_normal(theta.shape)
        th, p = theta.copy(), mom + 0.5 * step * grad
        for i in range(n_leap):
            th = th + step * p
            val, g = _theta_target(th, counts, n, tau)
            if i < n_leap - 1:
                p = p + step * g
        p = p + 0.5 * step * g
        log_ratio = val - logp_t - 0.5 * (np.sum(p**2, axis=1) - np.sum(mom**2, axis=1))
        log_ratio = np.where(np.isfinite(log_ratio), log_ratio, -np.inf)
        accept = np.log(gen.uniform(size=chains)) < log_ratio
        theta[accept], grad[accept], logp_t[accept] = th[accept], g[accept], val[accept]
        theta_acc += accept

        # counts | theta: symmetric increment/decrement proposal
        logp = _log_probs(theta)
        cand = propose_counts(counts, cfg.count_move_repeats, gen)
        valid = np.all(cand >= 0, axis=1)
        cur = _count_target(counts, logp, noisy, summary.noise_variance)
        new = _count_target(np.maximum(cand, 0), logp, noisy, summary.noise_variance)
        accept = valid & (np.log(gen.uniform(size=chains)) < new - cur)
        counts[accept] = cand[accept]
        count_acc += accept
        if accept.any():
            logp_t, grad = _theta_target(theta, counts, n, tau)

        if it >= warm and (it - warm) % thin == thin - 1:
            j = (it - warm) // thin
            theta_out[:, j] = theta
            counts_out[:, j] = counts

    diagnostics = {
        "theta_accept_rate": (theta_acc / total).tolist(),
        "count_accept_rate": (count_acc / total).tolist(),
        "mass_matrix": "identity",
        "theta_init_variance": 1.0,
        "config": asdict(cfg),
    }
    if theta_acc.mean() / total < cfg.min_accept or count_acc.mean() / total < cfg.min_accept:
        raise RuntimeError(f"mwg_sample: acceptance below {cfg.min_accept}: {diagnostics}")
    return MwgChain(
        theta_out.reshape(-1, dim),
        counts_out.reshape(-1, qm.n_queries),
        np.repeat(np.arange(chains), kept),
        diagnostics,
    )


def reconstruct_dataset(counts, rng=None) -> np.ndarray:
    """Cell-index records with the given counts, in shuffled order."""
    cv = counts if isinstance(counts, CountVector) else CountVector(np.asarray(counts))
    records = np.repeat(np.arange(cv.counts.size), cv.counts)
    if rng is not None:
        records = as_generator(rng).permutation(records)
    return records
