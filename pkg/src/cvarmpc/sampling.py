"""Fixed-variance Gaussian sampling of open-loop control sequences.

The sampling distribution is a per-timestep diagonal Gaussian over controls,
truncated to the control box via inverse-CDF sampling. The mean matrix is the
quantity the search updates; for a fixed diagonal covariance the natural
parameters are a constant linear rescaling of the means, so the means are
stored directly and the covariance factor is absorbed into the step size.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "ControlBox",
    "NaturalParams",
    "PolicyDraw",
    "sample_policies",
    "sufficient_statistic",
    "grad_log_partition",
]

logger = logging.getLogger(__name__)

# Below this truncated-interval probability mass the inverse CDF is numerically
# meaningless; the sample is clamped to the nearer bound instead.
_MASS_FLOOR = 1e-290


@dataclass(frozen=True)
class ControlBox:
    """Componentwise box constraints on controls."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError("box bounds must have matching shapes")
        if not np.all(lower < upper):
            raise ValueError("box lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n_controls(self) -> int:
        return self.lower.size

    def clamp(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.lower, self.upper)


@dataclass(frozen=True)
class NaturalParams:
    """Per-timestep Gaussian means (T x n_u) with a fixed per-channel std."""

    means: np.ndarray
    fixed_std: np.ndarray

    def __post_init__(self) -> None:
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        std = np.atleast_1d(np.asarray(self.fixed_std, dtype=float))
        if means.shape[1] != std.size:
            raise ValueError("means and fixed_std disagree on control dimension")
        if not np.all(std > 0.0):
            raise ValueError("fixed_std must be positive componentwise")
        if not np.all(np.isfinite(means)):
            raise ValueError("means must be finite")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "fixed_std", std)

    @property
    def horizon(self) -> int:
        return self.means.shape[0]

    @property
    def n_controls(self) -> int:
        return self.means.shape[1]

    def with_means(self, means: np.ndarray) -> "NaturalParams":
        return NaturalParams(means=means, fixed_std=self.fixed_std)


@dataclass(frozen=True)
class PolicyDraw:
    """One sampled open-loop control sequence (T x n_u)."""

    controls: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "controls", np.atleast_2d(np.asarray(self.controls, dtype=float)))


def sample_policies(
    params: NaturalParams,
    box: ControlBox,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample `count` open-loop control sequences, shape (count, T, n_u).

    Each entry is drawn from the one-dimensional normal truncated to the box,
    via u ~ Uniform(Phi(a), Phi(b)), x = mean + std * Phi^-1(u). Deterministic
    given the generator state. Means so far outside the box that the interval
    mass underflows produce samples clamped to the nearer bound (logged).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    mean = params.means  # (T, n_u)
    std = params.fixed_std  # (n_u,)
    a = ndtr((box.lower - mean) / std)  # (T, n_u)
    b = ndtr((box.upper - mean) / std)
    mass = b - a
    degenerate = mass < _MASS_FLOOR
    u = rng.uniform(size=(count,) + mean.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        draws = mean + std * ndtri(a + u * np.where(degenerate, 1.0, mass))
    if np.any(degenerate):
        nearer = np.where(mean <= box.lower, box.lower, box.upper)
        draws = np.where(degenerate, nearer, draws)
        logger.warning(
            "truncation interval underflow for %d entries; clamped to nearer bound",
            int(degenerate.sum()),
        )
    return np.clip(draws, box.lower, box.upper)


def sufficient_statistic(draw: PolicyDraw) -> np.ndarray:
    """Sufficient statistic of a draw: the identity on its control matrix."""
    return draw.controls


def grad_log_partition(params: NaturalParams) -> np.ndarray:
    """Gradient of the log partition function: the expected sufficient statistic.

    Uses the untruncated Gaussian expectation, i.e. the current means; the box
    is treated as an admissible-set restriction rather than part of the
    partition function, which biases tight-box runs slightly.
    """
    return params.means
