"""CVaR-shaped stochastic search over open-loop control distributions.

One optimizer iteration: sample N control sequences, roll each against all M
uncertainty samples with independent control-noise realizations, estimate the
per-policy CVaR row-wise, then take a gradient-ascent step on the sampling
means weighted by the shaped negated CVaR values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .dynamics import Environment
from .risk import CostSamples, RiskLevel, var_order_index
from .sampling import ControlBox, NaturalParams, sample_policies
from .shaping import ShapeSpec, shape_weights

__all__ = [
    "StepSchedule",
    "SearchConfig",
    "IterationReport",
    "UncertaintySamples",
    "evaluate_policy_cvars",
    "estimate_gradient",
    "gradient_step",
    "polyak_average",
    "optimize",
]

# Multiplier applied to the largest finite batch cost when replacing
# non-finite rollout costs; keeps diverged samples in the high-cost tail
# without breaking the ratio estimator.
NONFINITE_PENALTY_FACTOR = 10.0


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes alpha^k = a / (b + k)^c, or a constant a when kind='constant'."""

    a: float = 1.0
    b: float = 10.0
    c: float = 0.6
    kind: str = "power"

    def __post_init__(self) -> None:
        if self.kind not in ("power", "constant"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.a > 0.0:
            raise ValueError("a must be positive")
        if self.kind == "power":
            if self.b < 0.0:
                raise ValueError("b must be nonnegative")
            if not 0.5 < self.c <= 1.0:
                raise ValueError("c must lie in (0.5, 1]")

    def alpha(self, k: int) -> float:
        if self.kind == "constant":
            return self.a
        return self.a / (self.b + k) ** self.c


@dataclass(frozen=True)
class SearchConfig:
    n_policies: int
    n_uncertainty: int
    iterations: int
    level: RiskLevel
    shape: ShapeSpec = ShapeSpec()
    schedule: StepSchedule = StepSchedule()
    polyak: bool = True

    def __post_init__(self) -> None:
        if self.n_policies < 2:
            raise ValueError("need at least 2 policy samples")
        if self.n_uncertainty < 1:
            raise ValueError("need at least 1 uncertainty sample")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")


@dataclass(frozen=True)
class IterationReport:
    iteration: int
    cvars: np.ndarray
    weight_entropy: float
    delta_norm: float
    nonfinite_count: int = 0


@dataclass(frozen=True)
class UncertaintySamples:
    """M i.i.d. (state, parameter) draws from the current belief."""

    states: np.ndarray  # (M, n_x)
    params: Optional[np.ndarray] = None  # (M, n_phi) or None when parameters are known

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", np.atleast_2d(np.asarray(self.states, dtype=float)))
        if self.params is not None:
            params = np.atleast_2d(np.asarray(self.params, dtype=float))
            if params.shape[0] != self.states.shape[0]:
                raise ValueError("states and params must agree on M")
            object.__setattr__(self, "params", params)

    @property
    def count(self) -> int:
        return self.states.shape[0]


def evaluate_policy_cvars(rollout_costs: CostSamples, level: RiskLevel) -> np.ndarray:
    """Row-wise empirical CVaR of the N x M cost matrix.

    Vectorized form of `risk.empirical_cvar` applied per row: the k-th order
    statistic plus the scaled positive exceedances.
    """
    values = rollout_costs.values
    m = values.shape[1]
    k = var_order_index(level.gamma, m)
    ordered = np.sort(values, axis=1)
    var = ordered[:, k - 1]
    excess = np.maximum(values - var[:, None], 0.0).sum(axis=1)
    return var + excess / (m * (1.0 - level.gamma))


def estimate_gradient(
    params: NaturalParams,
    draws: np.ndarray,
    cvars: np.ndarray,
    spec: ShapeSpec,
) -> Tuple[np.ndarray, np.ndarray]:
    """Shaped Monte Carlo gradient of the smoothed objective at the current means.

    Returns (gradient (T, n_u), normalized weights (N,)). The gradient is the
    normalized-weight average of (draw - mean): sufficient statistic minus the
    log-partition gradient. The log transform of the objective shows up only
    as this weight normalization, so it needs no separate evaluation.
    """
    draws = np.asarray(draws, dtype=float)
    weights = shape_weights(-np.asarray(cvars, dtype=float), spec)
    total = weights.sum()
    if not total > 0.0:
        raise ValueError("shape weights sum to zero")
    weights = weights / total
    gradient = np.einsum("n,ntu->tu", weights, draws) - params.means
    return gradient, weights


def gradient_step(
    params: NaturalParams,
    draws: np.ndarray,
    cvars: np.ndarray,
    spec: ShapeSpec,
    alpha: float,
) -> NaturalParams:
    """One gradient-ascent step on the sampling means."""
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    gradient, _ = estimate_gradient(params, draws, cvars, spec)
    return params.with_means(params.means + alpha * gradient)


def polyak_average(history: List[np.ndarray]) -> np.ndarray:
    """Arithmetic mean of the iterates' means matrices."""
    if not history:
        raise ValueError("history must be nonempty")
    return np.mean(np.stack(history, axis=0), axis=0)


def _iteration_rng(rng_root: np.random.SeedSequence, mpc_step: int, iteration: int):
    """Two generators per inner iteration: policy sampling and rollout noise.

    Keyed by (mpc_step, iteration); the whole (N, M) noise block is drawn in
    one ordered pass, so results are identical regardless of worker count and
    reusing a key reproduces the same realizations (common random numbers).
    """
    child = np.random.SeedSequence(
        entropy=rng_root.entropy, spawn_key=rng_root.spawn_key + (mpc_step, iteration)
    )
    policy_seed, noise_seed = child.spawn(2)
    return np.random.default_rng(policy_seed), np.random.default_rng(noise_seed)


def _patch_nonfinite(costs: np.ndarray) -> Tuple[np.ndarray, int]:
    bad = ~np.isfinite(costs)
    count = int(bad.sum())
    if count:
        finite = costs[~bad]
        ceiling = NONFINITE_PENALTY_FACTOR * (float(finite.max()) if finite.size else 1.0)
        costs = np.where(bad, max(ceiling, 1.0), costs)
    return costs, count


def optimize(
    config: SearchConfig,
    params: NaturalParams,
    belief_samples: UncertaintySamples,
    env: Environment,
    rng_root: np.random.SeedSequence,
    mpc_step: int = 0,
) -> Tuple[NaturalParams, NaturalParams, List[IterationReport]]:
    """Run the inner optimization for one MPC step.

    Returns (final iterate, Polyak average, per-iteration reports). The Polyak
    average is the running mean over this call's iterates only; it is what the
    controller executes, never what the next iteration starts from.
    """
    if belief_samples.count != config.n_uncertainty:
        raise ValueError(
            f"expected {config.n_uncertainty} belief samples, got {belief_samples.count}"
        )
    box = env.spec.control_box
    reports: List[IterationReport] = []
    history: List[np.ndarray] = []
    noisy = np.any(env.spec.control_noise_std > 0.0)

    for k in range(config.iterations):
        policy_rng, noise_rng = _iteration_rng(rng_root, mpc_step, k)
        draws = sample_policies(params, box, config.n_policies, policy_rng)
        noise = None
        if noisy:
            noise = noise_rng.standard_normal(
                (config.n_policies, config.n_uncertainty, params.horizon, params.n_controls)
            )
        costs = env.rollout_batch(draws, belief_samples.states, belief_samples.params, noise)
        costs, nonfinite = _patch_nonfinite(costs)
        cvars = evaluate_policy_cvars(CostSamples(costs), config.level)
        gradient, weights = estimate_gradient(params, draws, cvars, config.shape)
        new_params = params.with_means(params.means + config.schedule.alpha(k) * gradient)
        entropy = float(-(weights * np.log(np.maximum(weights, 1e-300))).sum())
        delta = float(np.linalg.norm(new_params.means - params.means))
        reports.append(
            IterationReport(
                iteration=k,
                cvars=cvars,
                weight_entropy=entropy,
                delta_norm=delta,
                nonfinite_count=nonfinite,
            )
        )
        params = new_params
        history.append(params.means)

    polyak = params.with_means(polyak_average(history)) if (config.polyak and history) else params
    return params, polyak, reports
