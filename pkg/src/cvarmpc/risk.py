"""Empirical VaR/CVaR estimation over rollout cost samples.

All estimators work on plain arrays of costs and are pure functions: inputs
are never mutated (sorting happens on a copy so rollout ordering, which
carries seed provenance, is preserved).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RiskLevel",
    "CostSamples",
    "RiskSummary",
    "empirical_var",
    "empirical_cvar",
    "cvar_oracle_min_form",
    "risk_summary",
]

# Guard against float noise in gamma * M pushing an exact integer over the
# next ceiling (e.g. 0.9 * 10 == 9.000000000000002).
_INDEX_EPS = 1e-9


@dataclass(frozen=True)
class RiskLevel:
    """Risk level gamma in the open interval (0, 1)."""

    gamma: float

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"risk level must lie in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class CostSamples:
    """N x M cost matrix: rows are policy draws, columns uncertainty realizations."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("cost samples must form a nonempty N x M matrix")
        if not np.all(np.isfinite(values)):
            raise ValueError("cost samples must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n_policies(self) -> int:
        return self.values.shape[0]

    @property
    def n_uncertainty(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RiskSummary:
    mean: float
    var_hat: float
    cvar_hat: float


def _as_cost_vector(costs) -> np.ndarray:
    values = np.asarray(costs, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("no samples")
    if not np.all(np.isfinite(values)):
        raise ValueError("costs must be finite")
    return values


def var_order_index(gamma: float, m: int) -> int:
    """1-based order-statistic index k = max(1, ceil(gamma * m))."""
    k = math.ceil(gamma * m - _INDEX_EPS)
    return min(max(k, 1), m)


def empirical_var(costs, level: RiskLevel) -> float:
    """Empirical VaR: the k-th ascending order statistic with k = max(1, ceil(gamma*M)).

    This realizes inf{x : (1/M) sum 1{J <= x} >= gamma} exactly; ties need no
    special casing because the order statistic already picks the smallest
    qualifying sample value.
    """
    values = _as_cost_vector(costs)
    k = var_order_index(level.gamma, values.size)
    return float(np.partition(values, k - 1)[k - 1])


def empirical_cvar(costs, level: RiskLevel) -> float:
    """Empirical CVaR: VaR plus the mean positive exceedance scaled by 1/(M(1-gamma))."""
    values = _as_cost_vector(costs)
    var = empirical_var(values, level)
    excess = np.maximum(values - var, 0.0)
    return float(var + excess.sum() / (values.size * (1.0 - level.gamma)))


def cvar_oracle_min_form(costs, level: RiskLevel) -> float:
    """Independent CVaR oracle via the convex extremal form.

    Minimizes t + (1/(M(1-gamma))) * sum (J - t)^+ over t. The objective is
    piecewise linear with breakpoints at the sample values and slope -> +1 for
    large t, so scanning the samples as candidates is exact.
    """
    values = _as_cost_vector(costs)
    scale = 1.0 / (values.size * (1.0 - level.gamma))
    candidates = values[:, None]
    objective = candidates[:, 0] + scale * np.maximum(values[None, :] - candidates, 0.0).sum(axis=1)
    return float(objective.min())


def risk_summary(costs, level: RiskLevel) -> RiskSummary:
    """Mean / VaR / CVaR of a cost sample, packaged together."""
    values = _as_cost_vector(costs)
    return RiskSummary(
        mean=float(values.mean()),
        var_hat=empirical_var(values, level),
        cvar_hat=empirical_cvar(values, level),
    )
