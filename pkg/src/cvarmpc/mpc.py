"""Receding-horizon controller: belief -> inner search -> execute -> re-estimate.

Each MPC step draws M uncertainty samples from the current belief, runs the
inner optimization, executes the first tau controls of the Polyak-averaged
means on the true system, filters the new observation, then shifts the
sampling parameters forward.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from . import belief as bel
from .dynamics import Environment, SystemDefaults, step
from .sampling import NaturalParams, sample_policies
from .search import SearchConfig, UncertaintySamples, optimize

__all__ = ["MpcConfig", "EpisodeRecord", "shift", "run_episode"]

MODES = ("control_noise", "initial_state", "parameter_estimation")


@dataclass(frozen=True)
class MpcConfig:
    episode_length: int
    horizon: int
    search: SearchConfig
    fixed_std: np.ndarray = None
    init_mean_control: np.ndarray = None
    execute_steps: int = 1
    warm_start: bool = True
    shift_fill: str = "copy"  # or "zero"
    execute_sampled: bool = False

    def __post_init__(self) -> None:
        if self.execute_steps < 1 or self.execute_steps > self.horizon:
            raise ValueError("execute_steps must lie in [1, horizon]")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if self.shift_fill not in ("copy", "zero"):
            raise ValueError(f"unknown shift fill {self.shift_fill!r}")
        if self.fixed_std is None:
            raise ValueError("fixed_std is required")
        object.__setattr__(self, "fixed_std", np.atleast_1d(np.asarray(self.fixed_std, dtype=float)))
        if self.init_mean_control is None:
            object.__setattr__(self, "init_mean_control", np.zeros_like(self.fixed_std))
        else:
            object.__setattr__(
                self, "init_mean_control", np.atleast_1d(np.asarray(self.init_mean_control, dtype=float))
            )


@dataclass(frozen=True)
class EpisodeRecord:
    """Per-step logs of one closed-loop episode."""

    states: np.ndarray  # (L+1, n_x) ground truth
    controls: np.ndarray  # (L, n_u) applied (clamped) controls
    observations: np.ndarray  # (L+1, n_x)
    belief_mean: np.ndarray  # (L+1, n_x + n_phi)
    belief_std3: np.ndarray  # (L+1, n_x + n_phi), 3 sigma
    stage_costs: np.ndarray  # (L,)
    terminal_cost: float
    total_cost: float
    nonfinite_rollouts: int = 0

    @property
    def episode_length(self) -> int:
        return self.controls.shape[0]


def shift(params: NaturalParams, tau: int, fill: str = "copy") -> NaturalParams:
    """Recede the horizon: means_t <- means_{t+tau}, trailing rows re-initialized.

    With fill='copy' the trailing tau rows repeat the last shifted row (smooth
    for regulation tasks); 'zero' zeroes them.
    """
    horizon = params.horizon
    if tau < 0 or tau > horizon:
        raise ValueError(f"tau must lie in [0, {horizon}], got {tau}")
    if tau == 0:
        return params
    means = np.empty_like(params.means)
    means[: horizon - tau] = params.means[tau:]
    if fill == "copy":
        means[horizon - tau :] = means[horizon - tau - 1] if horizon > tau else params.means[-1]
    else:
        means[horizon - tau :] = 0.0
    return params.with_means(means)


def _initial_params(cfg: MpcConfig) -> NaturalParams:
    means = np.tile(cfg.init_mean_control, (cfg.horizon, 1))
    return NaturalParams(means=means, fixed_std=cfg.fixed_std)


def run_episode(
    defaults: SystemDefaults,
    mode: str,
    mpc: MpcConfig,
    filter_config: Optional[bel.FilterConfig],
    seed,
    control_noise_std=0.0,
    estimate_params: bool = True,
) -> EpisodeRecord:
    """Run one closed-loop episode on the true system.

    mode selects the uncertainty channel: 'control_noise' (known state and
    parameters, additive noise on the control channels, risk taken over noise
    realizations), 'initial_state' (uncertain x0 tracked by the particle
    filter) or 'parameter_estimation' (uncertain model parameters in the
    augmented filter). With estimate_params=False the filter tracks only the
    state under the prior-mean parameters and planning samples parameters
    fresh from the prior, which is the no-adaptation ablation.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    init_ss, truth_ss, pf_ss, search_ss, draw_ss = root.spawn(5)
    init_rng = np.random.default_rng(init_ss)
    truth_rng = np.random.default_rng(truth_ss)
    pf_rng = np.random.default_rng(pf_ss)
    draw_rng = np.random.default_rng(draw_ss)

    noise_vec = np.broadcast_to(
        np.atleast_1d(np.asarray(control_noise_std, dtype=float)),
        (defaults.spec.n_controls,),
    ).astype(float)
    use_noise = mode == "control_noise" and np.any(noise_vec > 0.0)
    spec = replace(defaults.spec, control_noise_std=noise_vec if use_noise else np.zeros_like(noise_vec))
    env = Environment(spec=spec, cost=defaults.cost)
    box = spec.control_box
    use_filter = mode in ("initial_state", "parameter_estimation")

    true_phi = defaults.true_param if mode == "parameter_estimation" else spec.nominal_phi()
    if mode == "control_noise":
        x = defaults.x0.copy()
    else:
        x = defaults.init_state_mean + np.sqrt(defaults.init_state_cov_diag) * init_rng.standard_normal(
            defaults.spec.n_states
        )

    belief = None
    if use_filter:
        if filter_config is None:
            raise ValueError(f"mode {mode!r} requires a filter config")
        param_est_on = mode == "parameter_estimation" and estimate_params
        if mode == "parameter_estimation" and not estimate_params:
            # state-only tracking under the prior-mean parameters
            noise_diag = filter_config.artificial_noise_diag.copy()
            noise_diag[spec.n_states :] = 0.0
            filter_config = replace(filter_config, artificial_noise_diag=noise_diag)
        param_mean = defaults.param_prior_mean if mode == "parameter_estimation" else spec.nominal_phi()
        param_cov = (
            defaults.param_prior_cov_diag if param_est_on else np.zeros_like(defaults.param_prior_cov_diag)
        )
        belief = bel.init_belief(
            defaults.init_state_mean,
            defaults.init_state_cov_diag,
            param_mean,
            param_cov,
            filter_config,
            init_rng,
        )

    def model_step(states, u, phis):
        return step(spec, states, u, phi=phis)

    params = _initial_params(mpc)
    length = mpc.episode_length
    n_x, n_u, n_phi = spec.n_states, spec.n_controls, spec.n_params
    states_log = np.empty((length + 1, n_x))
    controls_log = np.empty((length, n_u))
    obs_log = np.empty((length + 1, n_x))
    bmean_log = np.empty((length + 1, n_x + n_phi))
    bstd3_log = np.empty((length + 1, n_x + n_phi))
    stage_log = np.empty(length)
    nonfinite = 0

    def log_belief(t):
        if belief is not None:
            bmean_log[t] = belief.mean()
            bstd3_log[t] = 3.0 * belief.std()
        else:
            bmean_log[t] = np.concatenate([x, true_phi])
            bstd3_log[t] = 0.0

    states_log[0] = x
    obs_log[0] = x
    log_belief(0)

    sampled_params_rng = np.random.default_rng(draw_ss.spawn(1)[0])
    search_cfg = mpc.search
    m_samples = search_cfg.n_uncertainty
    t = 0
    while t < length:
        if use_filter:
            s_states, s_params = bel.draw_uncertainty_samples(belief, m_samples, draw_rng)
            if mode == "parameter_estimation" and not estimate_params:
                s_params = defaults.param_prior_mean + np.sqrt(
                    defaults.param_prior_cov_diag
                ) * sampled_params_rng.standard_normal((m_samples, n_phi))
            samples = UncertaintySamples(states=s_states, params=s_params)
        else:
            samples = UncertaintySamples(states=np.tile(x, (m_samples, 1)), params=None)

        iterate, polyak_params, reports = optimize(
            search_cfg, params, samples, env, search_ss, mpc_step=t
        )
        nonfinite += sum(r.nonfinite_count for r in reports)
        exec_source = polyak_params if search_cfg.polyak else iterate
        if mpc.execute_sampled:
            plan = sample_policies(exec_source, box, 1, truth_rng)[0]
        else:
            plan = exec_source.means

        for j in range(mpc.execute_steps):
            if t >= length:
                break
            u = box.clamp(plan[j])
            stage_log[t] = float(defaults.cost.stage(x, u))
            controls_log[t] = u
            noise = truth_rng.standard_normal(n_u) if use_noise else None
            x = step(spec, x, u, phi=true_phi, noise=noise)
            t += 1
            if use_filter:
                z = x + np.sqrt(defaults.measurement_noise_diag) * truth_rng.standard_normal(n_x)
                belief = bel.predict(belief, u, model_step, filter_config, pf_rng)
                belief = bel.update(belief, z, filter_config, pf_rng)
            else:
                z = x
            states_log[t] = x
            obs_log[t] = z
            log_belief(t)

        params = shift(iterate, mpc.execute_steps, mpc.shift_fill) if mpc.warm_start else _initial_params(mpc)

    terminal = float(defaults.cost.terminal(x))
    return EpisodeRecord(
        states=states_log,
        controls=controls_log,
        observations=obs_log,
        belief_mean=bmean_log,
        belief_std3=bstd3_log,
        stage_costs=stage_log,
        terminal_cost=terminal,
        total_cost=float(stage_log.sum() + terminal),
        nonfinite_rollouts=nonfinite,
    )
