"""Hamiltonian Monte Carlo with dual-averaging step size and diagonal mass adaptation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

LogDensity = Callable[[np.ndarray], tuple[float, np.ndarray]]


# divergent trajectories overflow; they end with a non-finite energy and are rejected
_DIVERGENCE_OK = dict(over="ignore", invalid="ignore")


@np.errstate(**_DIVERGENCE_OK)
def leapfrog(theta, momentum, grad, step, n_steps, logp_and_grad):
    """``n_steps`` leapfrog steps; works on single states or stacked chains."""
    theta = theta.copy()
    momentum = momentum + 0.5 * step * grad
    for i in range(n_steps):
        theta = theta + step * momentum
        logp, grad = logp_and_grad(theta)
        if i < n_steps - 1:
            momentum = momentum + step * grad
    momentum = momentum + 0.5 * step * grad
    return theta, momentum, logp, grad


@np.errstate(**_DIVERGENCE_OK)
def hmc_step(theta, logp, grad, step, n_steps, logp_and_grad, gen):
    """One Metropolis-corrected HMC transition for a single chain.

    Returns ``(theta, logp, grad, accept_prob)``.
    """
    momentum = gen.standard_normal(theta.shape)
    new_theta, new_mom, new_logp, new_grad = leapfrog(theta, momentum, grad, step, n_steps, logp_and_grad)
    log_ratio = new_logp - logp - 0.5 * (new_mom @ new_mom - momentum @ momentum)
    accept_prob = math.exp(min(0.0, log_ratio)) if np.isfinite(log_ratio) else 0.0
    if gen.uniform() < accept_prob:
        return new_theta, new_logp, new_grad, accept_prob
    return theta, logp, grad, accept_prob


class DualAveraging:
    """Nesterov dual averaging of log step size (Hoffman and Gelman, 2014)."""

    def __init__(self, initial_step: float, target: float = 0.8, gamma: float = 0.05, t0: float = 10.0, kappa: float = 0.75):
        self.mu = math.log(10 * initial_step)
        self.target = target
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.h_bar = 0.0
        self.log_step_bar = 0.0
        self.t = 0
        self.step = initial_step

    def update(self, accept_prob: float) -> float:
        self.t += 1
        t = self.t
        w = 1.0 / (t + self.t0)
        self.h_bar = (1 - w) * self.h_bar + w * (self.target - accept_prob)
        log_step = self.mu - math.sqrt(t) / self.gamma * self.h_bar
        eta = t ** (-self.kappa)
        self.log_step_bar = eta * log_step + (1 - eta) * self.log_step_bar
        self.step = math.exp(log_step)
        return self.step

    @property
    def final_step(self) -> float:
        return math.exp(self.log_step_bar)


@np.errstate(**_DIVERGENCE_OK)
def find_reasonable_step(theta, logp, grad, logp_and_grad, gen, initial: float = 0.1) -> float:
    step = initial
    momentum = gen.standard_normal(theta.shape)
    h0 = logp - 0.5 * momentum @ momentum

    def log_accept(s):
        _, new_mom, new_logp, _ = leapfrog(theta, momentum, grad, s, 1, logp_and_grad)
        h1 = new_logp - 0.5 * new_mom @ new_mom
        return h1 - h0 if np.isfinite(h1) else -np.inf

    direction = 1.0 if log_accept(step) > math.log(0.5) else -1.0
    for _ in range(100):
        if direction * log_accept(step) <= direction * math.log(0.5):
            break
        step *= 2.0**direction
    return step


@dataclass
class ChainResult:
    draws: np.ndarray
    accept_rate: float
    step_size: float
    n_leapfrog: int
    inv_mass: np.ndarray


def _scaled(logp_and_grad: LogDensity, scale: np.ndarray) -> LogDensity:
    """Target in standardized coordinates ``z = theta / scale``."""

    def target(z):
        value, grad = logp_and_grad(z * scale)
        return value, grad * scale

    return target


def run_hmc_chain(
    logp_and_grad: LogDensity,
    theta0: np.ndarray,
    n_warmup: int,
    n_draws: int,
    gen: np.random.Generator,
    path_length: float = 1.5,
    target_accept: float = 0.8,
    max_leapfrog: int = 256,
    adapt_mass: bool = True,
) -> ChainResult:
    """Fixed-path-length HMC with warmup adaptation, then frozen tuning.

    Warmup tunes the step size by dual averaging. With ``adapt_mass`` a
    diagonal inverse mass matrix is estimated from the middle of warmup and
    the step size is re-tuned for the rest; the path length is measured in
    the resulting standardized coordinates.
    """
    scale = np.ones(np.size(theta0))
    target = logp_and_grad
    z = np.array(theta0, dtype=float)
    logp, grad = target(z)
    if not np.isfinite(logp):
        raise ValueError("initial state has non-finite log density")

    def n_steps_for(s):
        return int(min(max_leapfrog, max(1, round(path_length / s))))

    fast_end = int(0.15 * n_warmup)
    slow_end = int(0.75 * n_warmup) if adapt_mass and n_warmup >= 20 else 0
    step = find_reasonable_step(z, logp, grad, target, gen)
    adapt = DualAveraging(step, target=target_accept)
    window = []
    for i in range(n_warmup):
        z, logp, grad, a = hmc_step(z, logp, grad, step, n_steps_for(step), target, gen)
        step = adapt.update(a)
        if fast_end <= i < slow_end:
            window.append(z * scale)
        if slow_end and i == slow_end - 1:
            w = np.array(window)
            count = len(w)
            var = w.var(axis=0) if count > 1 else np.ones_like(scale)
            # shrink toward a small constant, as in common adaptive HMC schemes
            var = (count / (count + 5.0)) * var + 1e-3 * (5.0 / (count + 5.0))
            theta = z * scale
            scale = np.sqrt(var)
            target = _scaled(logp_and_grad, scale)
            z = theta / scale
            logp, grad = target(z)
            step = find_reasonable_step(z, logp, grad, target, gen)
            adapt = DualAveraging(step, target=target_accept)
    if n_warmup > 0:
        step = adapt.final_step
    n_steps = n_steps_for(step)

    draws = np.empty((n_draws, z.size))
    accepted = 0.0
    for i in range(n_draws):
        z, logp, grad, a = hmc_step(z, logp, grad, step, n_steps, target, gen)
        draws[i] = z * scale
        accepted += a
    return ChainResult(draws, accepted / max(n_draws, 1), step, n_steps, scale**2)
