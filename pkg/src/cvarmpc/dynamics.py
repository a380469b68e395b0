"""Environment models: pendulum, cartpole and quadcopter with quadratic costs.

All three systems use explicit Euler integration (matching the Gym-style
source environments) and support batched evaluation: `step` broadcasts over
any leading dimensions of the state, control and parameter arrays. Control
noise enters through the control channels only: u_eff = clamp(u + noise*std).

The quadcopter is a standard 12-state rigid body with Euler-angle kinematics
and linear drag on the translational velocity; states are ordered
[x, y, z, vx, vy, vz, roll, pitch, yaw, p, q, r].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sampling import ControlBox, PolicyDraw

__all__ = [
    "EnvSpec",
    "QuadraticCost",
    "Trajectory",
    "Environment",
    "step",
    "rollout",
    "rollout_batch",
    "default_specs",
    "SystemDefaults",
    "wrap_angle",
]

SYSTEMS = ("pendulum", "cartpole", "quadcopter")


def wrap_angle(theta):
    """Wrap angles to the half-open interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)


@dataclass(frozen=True)
class EnvSpec:
    system: str
    dt: float
    physical: dict
    control_box: ControlBox
    control_noise_std: np.ndarray
    uncertain_params: tuple = ()

    def __post_init__(self) -> None:
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}, expected one of {SYSTEMS}")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        for name in ("mass", "length", "cart_mass", "pole_mass", "pole_length"):
            if name in self.physical and not self.physical[name] > 0.0:
                raise ValueError(f"physical parameter {name} must be positive")
        std = np.atleast_1d(np.asarray(self.control_noise_std, dtype=float))
        if std.size != self.control_box.n_controls or np.any(std < 0.0):
            raise ValueError("control_noise_std must be a nonnegative n_u vector")
        object.__setattr__(self, "control_noise_std", std)
        object.__setattr__(self, "uncertain_params", tuple(self.uncertain_params))

    @property
    def n_states(self) -> int:
        return {"pendulum": 2, "cartpole": 4, "quadcopter": 12}[self.system]

    @property
    def n_controls(self) -> int:
        return self.control_box.n_controls

    @property
    def n_params(self) -> int:
        return len(self.uncertain_params)

    def nominal_phi(self) -> np.ndarray:
        return np.array([self.physical[name] for name in self.uncertain_params], dtype=float)


@dataclass(frozen=True)
class QuadraticCost:
    """Diagonal quadratic running cost; the terminal cost reuses the state term."""

    q_diag: np.ndarray
    r_diag: np.ndarray
    x_target: np.ndarray

    def __post_init__(self) -> None:
        q = np.atleast_1d(np.asarray(self.q_diag, dtype=float))
        r = np.atleast_1d(np.asarray(self.r_diag, dtype=float))
        target = np.atleast_1d(np.asarray(self.x_target, dtype=float))
        if np.any(q < 0.0) or np.any(r < 0.0):
            raise ValueError("Q and R diagonals must be nonnegative")
        if q.shape != target.shape:
            raise ValueError("Q diagonal and target must share the state dimension")
        object.__setattr__(self, "q_diag", q)
        object.__setattr__(self, "r_diag", r)
        object.__setattr__(self, "x_target", target)

    def stage(self, x, u):
        dx = np.asarray(x, dtype=float) - self.x_target
        u = np.asarray(u, dtype=float)
        return (self.q_diag * dx * dx).sum(axis=-1) + (self.r_diag * u * u).sum(axis=-1)

    def terminal(self, x):
        dx = np.asarray(x, dtype=float) - self.x_target
        return (self.q_diag * dx * dx).sum(axis=-1)


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # (T+1, n_x)
    controls: np.ndarray  # (T, n_u), the clamped commanded controls
    cost: float


def _resolve(spec: EnvSpec, name: str, phi):
    """Value of a physical parameter, overridden by phi if it is uncertain."""
    if phi is not None and name in spec.uncertain_params:
        idx = spec.uncertain_params.index(name)
        return np.asarray(phi, dtype=float)[..., idx]
    return spec.physical[name]


def _step_pendulum(spec, x, u_eff, phi):
    g = spec.physical["gravity"]
    m = _resolve(spec, "mass", phi)
    length = spec.physical["length"]
    max_speed = spec.physical.get("max_speed", 8.0)
    th, thdot = x[..., 0], x[..., 1]
    acc = 3.0 * g / (2.0 * length) * np.sin(th) + 3.0 * u_eff[..., 0] / (m * length**2)
    new_thdot = np.clip(thdot + acc * spec.dt, -max_speed, max_speed)
    new_th = wrap_angle(th + new_thdot * spec.dt)
    return np.stack([new_th, new_thdot], axis=-1)


def _step_cartpole(spec, x, u_eff, phi):
    g = spec.physical["gravity"]
    m_c = spec.physical["cart_mass"]
    m_p = _resolve(spec, "pole_mass", phi)
    length = spec.physical["pole_length"]  # half-length, Gym convention
    pos, vel, th, thdot = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    force = u_eff[..., 0]
    total_mass = m_c + m_p
    sin_th, cos_th = np.sin(th), np.cos(th)
    temp = (force + m_p * length * thdot**2 * sin_th) / total_mass
    th_acc = (g * sin_th - cos_th * temp) / (
        length * (4.0 / 3.0 - m_p * cos_th**2 / total_mass)
    )
    x_acc = temp - m_p * length * th_acc * cos_th / total_mass
    return np.stack(
        [
            pos + vel * spec.dt,
            vel + x_acc * spec.dt,
            wrap_angle(th + thdot * spec.dt),
            thdot + th_acc * spec.dt,
        ],
        axis=-1,
    )


def _step_quadcopter(spec, x, u_eff, phi):
    g = spec.physical["gravity"]
    m = spec.physical["mass"]
    ix, iy, iz = spec.physical["ixx"], spec.physical["iyy"], spec.physical["izz"]
    drag = _resolve(spec, "drag", phi)
    pos, vel = x[..., 0:3], x[..., 3:6]
    roll, pitch, yaw = x[..., 6], x[..., 7], x[..., 8]
    p, q, r = x[..., 9], x[..., 10], x[..., 11]
    thrust = u_eff[..., 0]
    tau = u_eff[..., 1:4]

    sr, cr = np.sin(roll), np.cos(roll)
    sp, cp = np.sin(pitch), np.cos(pitch)
    sy, cy = np.sin(yaw), np.cos(yaw)
    # body z axis in world frame (ZYX Euler)
    thrust_dir = np.stack([cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr], axis=-1)
    accel = (
        thrust_dir * (thrust / m)[..., None]
        - np.array([0.0, 0.0, g])
        - (np.asarray(drag) / m)[..., None] * vel
    )

    tan_p = np.tan(pitch)
    sec_p = 1.0 / np.where(np.abs(cp) < 1e-6, np.copysign(1e-6, cp), cp)
    roll_rate = p + sr * tan_p * q + cr * tan_p * r
    pitch_rate = cr * q - sr * r
    yaw_rate = sr * sec_p * q + cr * sec_p * r

    p_dot = (tau[..., 0] + (iy - iz) * q * r) / ix
    q_dot = (tau[..., 1] + (iz - ix) * p * r) / iy
    r_dot = (tau[..., 2] + (ix - iy) * p * q) / iz

    dt = spec.dt
    return np.concatenate(
        [
            pos + vel * dt,
            vel + accel * dt,
            wrap_angle(np.stack([roll + roll_rate * dt, pitch + pitch_rate * dt, yaw + yaw_rate * dt], axis=-1)),
            np.stack([p + p_dot * dt, q + q_dot * dt, r + r_dot * dt], axis=-1),
        ],
        axis=-1,
    )


_STEPPERS = {
    "pendulum": _step_pendulum,
    "cartpole": _step_cartpole,
    "quadcopter": _step_quadcopter,
}


def step(spec: EnvSpec, x, u, phi=None, noise=None) -> np.ndarray:
    """Advance the state one timestep; broadcasts over leading dimensions.

    `noise` is a standard-normal draw over the control channels; the effective
    control is clamp(clamp(u) + noise * control_noise_std). Non-finite outputs
    are returned as-is for the caller's penalty handling.
    """
    x = np.asarray(x, dtype=float)
    u = spec.control_box.clamp(np.asarray(u, dtype=float))
    if noise is not None:
        u = spec.control_box.clamp(u + np.asarray(noise, dtype=float) * spec.control_noise_std)
    with np.errstate(over="ignore", invalid="ignore"):
        return _STEPPERS[spec.system](spec, x, u, phi)


def rollout(
    spec: EnvSpec,
    cost: QuadraticCost,
    policy: PolicyDraw,
    x0,
    phi=None,
    noise: Optional[np.ndarray] = None,
) -> Trajectory:
    """Roll a single policy out from x0; cost = sum of stage costs + terminal."""
    controls = spec.control_box.clamp(policy.controls)
    horizon = controls.shape[0]
    states = np.empty((horizon + 1, spec.n_states))
    states[0] = np.asarray(x0, dtype=float)
    total = 0.0
    for t in range(horizon):
        total += float(cost.stage(states[t], controls[t]))
        step_noise = None if noise is None else noise[t]
        states[t + 1] = step(spec, states[t], controls[t], phi=phi, noise=step_noise)
    total += float(cost.terminal(states[horizon]))
    return Trajectory(states=states, controls=controls, cost=total)


def rollout_batch(
    spec: EnvSpec,
    cost: QuadraticCost,
    controls: np.ndarray,
    x0s: np.ndarray,
    phis: Optional[np.ndarray] = None,
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Costs of N policies against M uncertainty samples, shape (N, M).

    controls: (N, T, n_u); x0s: (M, n_x); phis: (M, n_phi) or None;
    noise: (N, M, T, n_u) standard-normal draws or None. The commanded control
    of policy n is shared across all M columns (common random numbers live in
    the noise tensor, not the controls).
    """
    controls = spec.control_box.clamp(np.asarray(controls, dtype=float))
    n_pol, horizon = controls.shape[0], controls.shape[1]
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    n_unc = x0s.shape[0]
    states = np.broadcast_to(x0s[None, :, :], (n_pol, n_unc, x0s.shape[1])).copy()
    phi = None if phis is None else np.atleast_2d(np.asarray(phis, dtype=float))[None, :, :]
    totals = np.zeros((n_pol, n_unc))
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(horizon):
            u_t = controls[:, t, :][:, None, :]  # (N, 1, n_u)
            totals += cost.stage(states, u_t)
            step_noise = None if noise is None else noise[:, :, t, :]
            states = step(spec, states, u_t, phi=phi, noise=step_noise)
        totals += cost.terminal(states)
    return totals


@dataclass
class Environment:
    """An EnvSpec bound to its cost function, the handle the optimizer rolls against."""

    spec: EnvSpec
    cost: QuadraticCost

    def rollout_batch(self, controls, x0s, phis=None, noise=None) -> np.ndarray:
        return rollout_batch(self.spec, self.cost, controls, x0s, phis=phis, noise=noise)


@dataclass(frozen=True)
class SystemDefaults:
    """Shipped constants for one system: dynamics, cost and belief-space setup."""

    spec: EnvSpec
    cost: QuadraticCost
    x0: np.ndarray
    init_state_mean: np.ndarray
    init_state_cov_diag: np.ndarray
    param_prior_mean: np.ndarray
    param_prior_cov_diag: np.ndarray
    true_param: np.ndarray
    measurement_noise_diag: np.ndarray
    artificial_noise_diag: np.ndarray  # over the augmented [state, param] vector


def default_specs() -> dict:
    """Table of shipped defaults per system."""
    table = {}

    table["pendulum"] = SystemDefaults(
        spec=EnvSpec(
            system="pendulum",
            dt=0.05,
            physical={"mass": 1.0, "length": 1.0, "gravity": 10.0, "max_speed": 8.0},
            control_box=ControlBox(lower=[-10.0], upper=[10.0]),
            control_noise_std=[0.0],
            uncertain_params=("mass",),
        ),
        cost=QuadraticCost(q_diag=[3.0, 0.01], r_diag=[0.01], x_target=[0.0, 0.0]),
        x0=np.array([-np.pi, 0.0]),
        init_state_mean=np.array([np.pi, 0.0]),
        init_state_cov_diag=np.array([0.1, 0.1]),
        param_prior_mean=np.array([5.0]),
        param_prior_cov_diag=np.array([4.0]),
        true_param=np.array([2.0]),
        measurement_noise_diag=np.array([1.0, 1.0]),
        artificial_noise_diag=np.array([1e-5, 1e-5, 1e-9]),
    )

    table["cartpole"] = SystemDefaults(
        spec=EnvSpec(
            system="cartpole",
            dt=0.02,
            physical={
                "cart_mass": 1.0,
                "pole_mass": 0.1,
                "pole_length": 0.5,
                "gravity": 9.8,
            },
            control_box=ControlBox(lower=[-15.0], upper=[15.0]),
            control_noise_std=[0.0],
            uncertain_params=("pole_mass",),
        ),
        cost=QuadraticCost(
            q_diag=[0.01, 0.1, 1.0, 0.1], r_diag=[0.001], x_target=[0.0, 0.0, 0.0, 0.0]
        ),
        x0=np.array([0.0, 0.0, -np.pi, 0.0]),
        init_state_mean=np.array([0.0, 0.0, -np.pi, 0.0]),
        init_state_cov_diag=np.array([0.0, 0.0, 0.0, 0.0]),
        param_prior_mean=np.array([5.0]),
        param_prior_cov_diag=np.array([5.0]),
        true_param=np.array([0.1]),
        measurement_noise_diag=np.array([1.0, 1.0, 0.25, 0.25]),
        artificial_noise_diag=np.array([0.001, 0.001, 0.001, 0.001, 1e-6]),
    )

    table["quadcopter"] = SystemDefaults(
        spec=EnvSpec(
            system="quadcopter",
            dt=0.02,
            physical={
                "mass": 1.0,
                "gravity": 9.81,
                "ixx": 0.1,
                "iyy": 0.1,
                "izz": 0.2,
                "drag": 0.1,
            },
            control_box=ControlBox(lower=[0.0, -10.0, -10.0, -1.0], upper=[20.0, 10.0, 10.0, 1.0]),
            control_noise_std=[0.0, 0.0, 0.0, 0.0],
            uncertain_params=("drag",),
        ),
        cost=QuadraticCost(
            q_diag=[10.0, 10.0, 10.0, 1.0, 1.0, 1.0, 5.0, 5.0, 1.0, 0.5, 0.5, 0.5],
            r_diag=[0.01, 0.1, 0.1, 0.1],
            x_target=[2.0, 2.0, 2.0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        ),
        x0=np.zeros(12),
        init_state_mean=np.zeros(12),
        init_state_cov_diag=np.zeros(12),
        param_prior_mean=np.array([0.5]),
        param_prior_cov_diag=np.array([0.5]),
        true_param=np.array([0.1]),
        measurement_noise_diag=np.array(
            [0.1, 0.1, 0.1, 0.01, 0.01, 0.01, 0.08, 0.08, 0.08, 0.01, 0.1, 0.01]
        ),
        artificial_noise_diag=np.array([1e-5] * 12 + [1e-4]),
    )

    return table
