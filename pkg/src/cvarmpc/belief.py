"""Particle filter over augmented (state, parameter) vectors.

The parameter components follow a random walk driven purely by the artificial
process noise, which is also what keeps the particle set from impoverishing.
Weights live in log space during updates; resampling is systematic and
triggered by the effective sample size dropping below a configured fraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

__all__ = [
    "Belief",
    "FilterConfig",
    "init_belief",
    "predict",
    "update",
    "draw_uncertainty_samples",
    "systematic_resample",
    "effective_sample_size",
]


@dataclass(frozen=True)
class FilterConfig:
    particle_count: int
    artificial_noise_diag: np.ndarray  # variance over [state, param]
    measurement_noise_diag: np.ndarray  # variance over observed state
    resample_threshold: float = 0.5
    reflect_nonnegative_params: bool = False

    def __post_init__(self) -> None:
        if self.particle_count < 2:
            raise ValueError("need at least 2 particles")
        if not 0.0 < self.resample_threshold <= 1.0:
            raise ValueError("resample threshold must lie in (0, 1]")
        for name in ("artificial_noise_diag", "measurement_noise_diag"):
            diag = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if np.any(diag < 0.0):
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, diag)


@dataclass(frozen=True)
class Belief:
    """Weighted particle set over (state, parameter) pairs."""

    states: np.ndarray  # (P, n_x)
    params: np.ndarray  # (P, n_phi), possibly zero columns
    weights: np.ndarray  # (P,), sums to 1

    def __post_init__(self) -> None:
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        params = np.asarray(self.params, dtype=float).reshape(states.shape[0], -1)
        weights = np.asarray(self.weights, dtype=float).ravel()
        if weights.size != states.shape[0]:
            raise ValueError("one weight per particle required")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "weights", weights)

    @property
    def count(self) -> int:
        return self.states.shape[0]

    def augmented(self) -> np.ndarray:
        return np.concatenate([self.states, self.params], axis=1)

    def mean(self) -> np.ndarray:
        return self.weights @ self.augmented()

    def std(self) -> np.ndarray:
        aug = self.augmented()
        mean = self.weights @ aug
        var = self.weights @ (aug - mean) ** 2
        return np.sqrt(np.maximum(var, 0.0))


def init_belief(
    state_mean,
    state_cov_diag,
    param_mean,
    param_cov_diag,
    config: FilterConfig,
    rng: np.random.Generator,
) -> Belief:
    """Equally weighted draws from independent Gaussian priors over state and parameters."""
    state_mean = np.atleast_1d(np.asarray(state_mean, dtype=float))
    param_mean = np.atleast_1d(np.asarray(param_mean, dtype=float))
    state_std = np.sqrt(np.atleast_1d(np.asarray(state_cov_diag, dtype=float)))
    param_std = np.sqrt(np.atleast_1d(np.asarray(param_cov_diag, dtype=float)))
    count = config.particle_count
    states = state_mean + state_std * rng.standard_normal((count, state_mean.size))
    params = param_mean + param_std * rng.standard_normal((count, param_mean.size))
    if config.reflect_nonnegative_params:
        params = np.abs(params)
    return Belief(states=states, params=params, weights=np.full(count, 1.0 / count))


def predict(
    belief: Belief,
    u,
    model_step: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    config: FilterConfig,
    rng: np.random.Generator,
) -> Belief:
    """Propagate each particle through the noise-free model with its own parameters,
    then add artificial noise over the whole augmented vector."""
    states = model_step(belief.states, np.asarray(u, dtype=float), belief.params)
    noise_std = np.sqrt(config.artificial_noise_diag)
    noise = noise_std * rng.standard_normal((belief.count, noise_std.size))
    n_x = states.shape[1]
    states = states + noise[:, :n_x]
    params = belief.params + noise[:, n_x:]
    if config.reflect_nonnegative_params:
        params = np.abs(params)
    weights = belief.weights.copy()
    bad = ~np.all(np.isfinite(states), axis=1)
    if np.any(bad):
        weights[bad] = 0.0
        states = np.where(bad[:, None], 0.0, states)
        total = weights.sum()
        weights = weights / total if total > 0.0 else np.full(belief.count, 1.0 / belief.count)
    return Belief(states=states, params=params, weights=weights)


def effective_sample_size(weights: np.ndarray) -> float:
    return float(1.0 / np.sum(np.asarray(weights, dtype=float) ** 2))


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling indices: one uniform offset, stratified positions."""
    weights = np.asarray(weights, dtype=float)
    count = weights.size
    positions = (rng.uniform() + np.arange(count)) / count
    return np.searchsorted(np.cumsum(weights), positions)


def update(
    belief: Belief,
    z,
    config: FilterConfig,
    rng: np.random.Generator,
) -> Belief:
    """Reweight by the full-state Gaussian measurement likelihood; resample on low ESS.

    Log-domain weights with max-subtraction keep far-out particle sets from
    underflowing; a fully degenerate set falls back to uniform weights.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    var = config.measurement_noise_diag
    residual = z - belief.states
    log_lik = -0.5 * np.sum(residual**2 / np.maximum(var, 1e-300), axis=1)
    with np.errstate(divide="ignore"):
        log_w = np.log(belief.weights) + log_lik
    log_w -= log_w.max()
    weights = np.exp(log_w)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0.0:
        weights = np.full(belief.count, 1.0 / belief.count)
    else:
        weights = weights / total
    new = Belief(states=belief.states, params=belief.params, weights=weights)
    if effective_sample_size(weights) < config.resample_threshold * belief.count:
        idx = systematic_resample(weights, rng)
        new = Belief(
            states=belief.states[idx],
            params=belief.params[idx],
            weights=np.full(belief.count, 1.0 / belief.count),
        )
    return new


def draw_uncertainty_samples(
    belief: Belief, count: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """M draws with replacement proportional to the particle weights."""
    if count < 1:
        raise ValueError("count must be >= 1")
    idx = rng.choice(belief.count, size=count, p=belief.weights)
    return belief.states[idx], belief.params[idx]
