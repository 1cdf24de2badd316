"""Bayesian logistic regression with a Gaussian prior, fitted by Laplace approximation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from synmix.stats_core import GaussianDist, as_generator

# Toy data: two fair-coin covariates and a logistic label, all binary.
TOY_ARITIES = (2, 2, 2)


@dataclass(frozen=True, eq=False)
class LogRegData:
    """Design matrix and binary labels; ``weights`` are row multiplicities."""

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != y.size:
            raise ValueError("design matrix and labels disagree in length")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        w = np.ones(y.size) if self.weights is None else np.asarray(self.weights, dtype=float).ravel()
        if w.shape != y.shape or np.any(w < 0):
            raise ValueError("weights must be non-negative, one per row")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> float:
        return float(self.weights.sum())

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @classmethod
    def empty(cls, dim: int) -> "LogRegData":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def from_cell_counts(cls, counts, intercept: bool = False) -> "LogRegData":
        """Collapse toy records to the 8 distinct (x1, x2, y) rows with counts."""
        cells = np.array([(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)], dtype=float)
        x = cells[:, :2]
        if intercept:
            x = np.column_stack([np.ones(len(cells)), x])
        return cls(x, cells[:, 2], np.asarray(counts, dtype=float))

    @classmethod
    def from_records(cls, records, intercept: bool = False) -> "LogRegData":
        """Toy records given as cell indices or as an (n, 3) binary table."""
        records = np.asarray(records, dtype=int)
        if records.ndim == 2:
            records = np.ravel_multi_index(records.T, TOY_ARITIES)
        return cls.from_cell_counts(np.bincount(records, minlength=8), intercept)


@dataclass(frozen=True)
class LogRegPrior:
    dim: int
    variance: float = 10.0
    mean: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("prior variance must be > 0")

    @property
    def mean_vector(self) -> np.ndarray:
        return np.zeros(self.dim) if self.mean is None else np.asarray(self.mean, dtype=float)


def log_posterior(beta, data: LogRegData, prior: LogRegPrior):
    """Unnormalized log posterior with its analytic gradient and Hessian."""
    beta = np.asarray(beta, dtype=float)
    eta = data.x @ beta
    w = data.weights
    value = np.sum(w * (data.y * log_expit(eta) + (1 - data.y) * log_expit(-eta)))
    p = expit(eta)
    grad = data.x.T @ (w * (data.y - p))
    hess = -(data.x.T * (w * p * (1 - p))) @ data.x
    centered = beta - prior.mean_vector
    value -= 0.5 * centered @ centered / prior.variance
    grad = grad - centered / prior.variance
    hess = hess - np.eye(beta.size) / prior.variance
    return float(value), grad, 0.5 * (hess + hess.T)


class LaplaceConvergenceError(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True, eq=False)
class LaplacePosterior:
    mode: np.ndarray
    cov: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def mean(self) -> np.ndarray:
        return self.mode

    @property
    def dim(self) -> int:
        return self.mode.size

    def marginal(self, coord: int = 0) -> GaussianDist:
        return GaussianDist(float(self.mode[coord]), float(self.cov[coord, coord]))

    def sample(self, k: int, rng) -> np.ndarray:
        chol = np.linalg.cholesky(self.cov)
        z = as_generator(rng).standard_normal((k, self.dim))
        return self.mode + z @ chol.T


def laplace_fit(data: LogRegData, prior: LogRegPrior, tol: float = 1e-10, max_iter: int = 100) -> LaplacePosterior:
    """Newton's method with step halving to the MAP, covariance from the Hessian."""
    if data.dim != prior.dim:
        raise ValueError("data and prior dimensions disagree")
    if data.n == 0:
        return LaplacePosterior(prior.mean_vector.copy(), prior.variance * np.eye(prior.dim), {"iterations": 0})
    beta = prior.mean_vector.copy()
    value, grad, hess = log_posterior(beta, data, prior)
    trace = [(0, value, float(np.linalg.norm(grad)))]
    for it in range(1, max_iter + 1):
        if np.linalg.norm(grad) <= tol:
            break
        direction = np.linalg.solve(-hess, grad)
        step = 1.0
        while True:
            candidate = beta + step * direction
            new_value, new_grad, new_hess = log_posterior(candidate, data, prior)
            if new_value >= value - 1e-12 * abs(value) or step < 1e-10:
                break
            step *= 0.5
        beta, value, grad, hess = candidate, new_value, new_grad, new_hess
        trace.append((it, value, float(np.linalg.norm(grad))))
    else:
        if np.linalg.norm(grad) > tol:
            raise LaplaceConvergenceError(f"Newton did not converge in {max_iter} iterations", trace)
    cov = np.linalg.inv(-hess)
    cov = 0.5 * (cov + cov.T)
    return LaplacePosterior(beta, cov, {"iterations": len(trace) - 1, "grad_norm": trace[-1][2]})


class LogRegLaplaceAnalyzer:
    """Downstream analysis registered as ``logreg-laplace``."""

    name = "logreg-laplace"

    def __init__(self, prior: LogRegPrior | None = None, intercept: bool = False, tol: float = 1e-10):
        self.intercept = intercept
        self.prior = prior or LogRegPrior(3 if intercept else 2)
        self.tol = tol

    def to_data(self, dataset) -> LogRegData:
        if isinstance(dataset, LogRegData):
            return dataset
        return LogRegData.from_records(dataset, self.intercept)

    def fit(self, dataset) -> LaplacePosterior:
        return laplace_fit(self.to_data(dataset), self.prior, tol=self.tol)

    def marginal(self, post: LaplacePosterior, coord: int = 0) -> GaussianDist:
        return post.marginal(coord)

    def sample(self, post: LaplacePosterior, k: int, gen) -> np.ndarray:
        return post.sample(k, gen)


def simulate_toy_records(n: int, coeffs=(1.0, 0.0), rng=0) -> np.ndarray:
    """(n, 3) binary table: two coin flips and a logistic label without intercept."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    x = gen.integers(0, 2, size=(n, 2))
    y = (gen.uniform(size=n) < expit(x @ np.asarray(coeffs, dtype=float))).astype(int)
    return np.column_stack([x, y])


def simulate_toy_data(n: int, coeffs=(1.0, 0.0), rng=0) -> LogRegData:
    records = simulate_toy_records(n, coeffs, rng)
    return LogRegData(records[:, :2], records[:, 2])
