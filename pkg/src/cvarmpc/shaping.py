"""Shape functions turning negated CVaR values into nonnegative gradient weights.

Three kinds are supported: identity (with a positivity shift), exponential
(softmax-style, the MPPI-like weighting) and sigmoid (soft elite threshold,
CEM-like). Only weight ratios matter downstream, so every kind is free to
rescale its output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ShapeSpec", "shape_weights"]

_KINDS = ("identity", "exponential", "sigmoid")


@dataclass(frozen=True)
class ShapeSpec:
    kind: str = "exponential"
    kappa: float = 1.0
    elite_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind in ("exponential", "sigmoid") and not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.kind == "sigmoid" and not 0.0 < self.elite_fraction < 1.0:
            raise ValueError(f"elite fraction must lie in (0, 1), got {self.elite_fraction}")


def shape_weights(neg_cvar_values, spec: ShapeSpec) -> np.ndarray:
    """Nonnegative weights S(y_n) for negated CVaR values y_n.

    Monotone nondecreasing in y for every kind; never returns an all-zero
    vector. Exponential subtracts the batch max before exponentiating so that
    large-kappa runs stay finite and reproducible.
    """
    y = np.asarray(neg_cvar_values, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("no values to weight")
    if not np.all(np.isfinite(y)):
        raise ValueError("values must be finite")

    if spec.kind == "identity":
        span = float(y.max() - y.min())
        eps = 1e-12 * (1.0 + span)
        weights = y - y.min() + eps
    elif spec.kind == "exponential":
        weights = np.exp(spec.kappa * (y - y.max()))
    else:  # sigmoid
        threshold = float(np.quantile(y, 1.0 - spec.elite_fraction))
        arg = np.clip(spec.kappa * (y - threshold), -700.0, 700.0)
        weights = (y - y.min()) / (1.0 + np.exp(-arg))
        if not weights.sum() > 0.0:
            # all-equal batch: y - y_lb vanishes everywhere, fall back to uniform
            weights = np.ones_like(y)
    return weights
