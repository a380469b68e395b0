"""Experiment configuration: parsing, validation and defaults.

Configs are YAML (JSON being a YAML subset is accepted as the canonical
machine form). Validation failures raise ConfigError naming the offending
field; the CLI maps that to exit code 2.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .belief import FilterConfig
from .dynamics import SYSTEMS, SystemDefaults, default_specs
from .mpc import MODES, MpcConfig
from .risk import RiskLevel
from .search import SearchConfig, StepSchedule
from .shaping import ShapeSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "resolved_dict"]


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the field."""


# Per-system tuned defaults for the inner search and MPC loop. Configs can
# override any of these.
_SYSTEM_DEFAULTS = {
    "pendulum": {
        "search": {
            "n_policies": 128,
            "n_uncertainty": 4,
            "iterations": 16,
            "shape": {"kind": "sigmoid", "kappa": 2.0, "elite_fraction": 0.2},
            "schedule": {"kind": "constant", "a": 1.5},
            "polyak": True,
        },
        "mpc": {
            "episode_length": 100,
            "horizon": 40,
            "fixed_std": [2.0],
            "execute_steps": 1,
            "warm_start": True,
            "shift_fill": "copy",
            "execute_sampled": False,
        },
        "filter": {
            "particle_count": 1000,
            "resample_threshold": 0.5,
            "reflect_nonnegative_params": False,
        },
    },
    "cartpole": {
        "search": {
            "n_policies": 150,
            "n_uncertainty": 8,
            "iterations": 4,
            "shape": {"kind": "exponential", "kappa": 0.15},
            "schedule": {"kind": "constant", "a": 1.0},
            "polyak": True,
        },
        "mpc": {
            "episode_length": 250,
            "horizon": 60,
            "fixed_std": [5.0],
            "execute_steps": 2,
            "warm_start": True,
            "shift_fill": "copy",
            "execute_sampled": False,
        },
        "filter": {
            "particle_count": 1000,
            "resample_threshold": 0.5,
            "reflect_nonnegative_params": True,
        },
    },
    "quadcopter": {
        "search": {
            "n_policies": 100,
            "n_uncertainty": 8,
            "iterations": 4,
            "shape": {"kind": "exponential", "kappa": 0.05},
            "schedule": {"kind": "constant", "a": 1.0},
            "polyak": True,
        },
        "mpc": {
            "episode_length": 150,
            "horizon": 40,
            "fixed_std": [2.0, 0.5, 0.5, 0.1],
            "init_mean_control": [9.81, 0.0, 0.0, 0.0],
            "execute_steps": 1,
            "warm_start": True,
            "shift_fill": "copy",
            "execute_sampled": False,
        },
        "filter": {
            "particle_count": 2000,
            "resample_threshold": 0.5,
            "reflect_nonnegative_params": True,
        },
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    system: str
    mode: str
    noise_levels: tuple
    episodes: int
    root_seed: int
    output_dir: str
    gamma: float = 0.9
    workers: int = 1
    estimate_params: bool = True
    search: Optional[SearchConfig] = None
    mpc: Optional[MpcConfig] = None
    filter: Optional[FilterConfig] = None
    defaults: Optional[SystemDefaults] = None
    raw: dict = field(default_factory=dict)

    @property
    def level(self) -> RiskLevel:
        return RiskLevel(self.gamma)

    def cell_names(self) -> list:
        if self.mode == "control_noise":
            return [f"{self.system}_{self.mode}_noise{level:g}" for level in self.noise_levels]
        return [f"{self.system}_{self.mode}"]


def _require(raw: dict, key: str, kind, context: str = ""):
    label = f"{context}{key}"
    if key not in raw:
        raise ConfigError(f"missing required field: {label}")
    value = raw[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"field {label} has wrong type: expected {kind}, got {type(value).__name__}")
    return value


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _build_search(raw: dict, gamma: float) -> SearchConfig:
    try:
        shape = ShapeSpec(
            kind=raw["shape"].get("kind", "exponential"),
            kappa=float(raw["shape"].get("kappa", 1.0)),
            elite_fraction=float(raw["shape"].get("elite_fraction", 0.1)),
        )
        schedule = StepSchedule(
            a=float(raw["schedule"].get("a", 1.0)),
            b=float(raw["schedule"].get("b", 10.0)),
            c=float(raw["schedule"].get("c", 0.6)),
            kind=raw["schedule"].get("kind", "power"),
        )
        return SearchConfig(
            n_policies=int(raw["n_policies"]),
            n_uncertainty=int(raw["n_uncertainty"]),
            iterations=int(raw["iterations"]),
            level=RiskLevel(gamma),
            shape=shape,
            schedule=schedule,
            polyak=bool(raw["polyak"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"search: {exc}") from exc


def _build_mpc(raw: dict, search: SearchConfig) -> MpcConfig:
    try:
        return MpcConfig(
            episode_length=int(raw["episode_length"]),
            horizon=int(raw["horizon"]),
            search=search,
            fixed_std=np.asarray(raw["fixed_std"], dtype=float),
            init_mean_control=(
                np.asarray(raw["init_mean_control"], dtype=float)
                if raw.get("init_mean_control") is not None
                else None
            ),
            execute_steps=int(raw["execute_steps"]),
            warm_start=bool(raw["warm_start"]),
            shift_fill=raw.get("shift_fill", "copy"),
            execute_sampled=bool(raw.get("execute_sampled", False)),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"mpc: {exc}") from exc


def _build_filter(raw: dict, defaults: SystemDefaults, mode: str) -> FilterConfig:
    noise_diag = raw.get("artificial_noise_diag")
    if noise_diag is None:
        noise_diag = defaults.artificial_noise_diag
    measurement = raw.get("measurement_noise_diag")
    if measurement is None:
        measurement = defaults.measurement_noise_diag
    try:
        return FilterConfig(
            particle_count=int(raw["particle_count"]),
            artificial_noise_diag=np.asarray(noise_diag, dtype=float),
            measurement_noise_diag=np.asarray(measurement, dtype=float),
            resample_threshold=float(raw["resample_threshold"]),
            reflect_nonnegative_params=bool(raw["reflect_nonnegative_params"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"filter: {exc}") from exc


def _apply_env_overrides(defaults: SystemDefaults, env_raw: dict) -> SystemDefaults:
    if not env_raw:
        return defaults
    spec = defaults.spec
    if "dt" in env_raw:
        spec = replace(spec, dt=float(env_raw["dt"]))
    if "physical" in env_raw:
        physical = dict(spec.physical)
        physical.update({k: float(v) for k, v in env_raw["physical"].items()})
        spec = replace(spec, physical=physical)
    if "control_noise_std" in env_raw:
        spec = replace(spec, control_noise_std=np.asarray(env_raw["control_noise_std"], dtype=float))
    return replace(defaults, spec=spec)


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    system = _require(raw, "system", str)
    if system not in SYSTEMS:
        raise ConfigError(f"system: unknown system {system!r}, expected one of {SYSTEMS}")
    mode = raw.get("mode", "control_noise")
    if mode not in MODES:
        raise ConfigError(f"mode: unknown mode {mode!r}, expected one of {MODES}")
    episodes = _require(raw, "episodes", int)
    if episodes < 1:
        raise ConfigError("episodes: must be >= 1")
    gamma = float(raw.get("gamma", 0.9))
    if not 0.0 < gamma < 1.0:
        raise ConfigError("gamma: must lie in (0, 1)")
    noise_levels = raw.get("noise_levels", [0.0])
    if not isinstance(noise_levels, (list, tuple)) or not noise_levels:
        raise ConfigError("noise_levels: must be a nonempty list")

    merged = _merge(_SYSTEM_DEFAULTS[system], {k: raw.get(k, {}) or {} for k in ("search", "mpc", "filter")})
    search = _build_search(merged["search"], gamma)
    mpc = _build_mpc(merged["mpc"], search)
    defaults = _apply_env_overrides(default_specs()[system], raw.get("env") or {})
    filt = _build_filter(merged["filter"], defaults, mode)
    if mpc.fixed_std.size != defaults.spec.n_controls:
        raise ConfigError("mpc.fixed_std: length must match the system's control dimension")

    return ExperimentConfig(
        system=system,
        mode=mode,
        noise_levels=tuple(float(level) for level in noise_levels),
        episodes=episodes,
        root_seed=int(raw.get("root_seed", 0)),
        output_dir=str(_require(raw, "output_dir", str)),
        gamma=gamma,
        workers=int(raw.get("workers", 1)),
        estimate_params=bool(raw.get("estimate_params", True)),
        search=search,
        mpc=mpc,
        filter=filt,
        defaults=defaults,
        raw=raw,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path) as handle:
        raw = yaml.safe_load(handle)
    return parse_config(raw)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def resolved_dict(config: ExperimentConfig) -> dict:
    """Fully materialized config (defaults included), sufficient to reproduce the run."""
    out = {
        "system": config.system,
        "mode": config.mode,
        "noise_levels": list(config.noise_levels),
        "episodes": config.episodes,
        "root_seed": config.root_seed,
        "output_dir": config.output_dir,
        "gamma": config.gamma,
        "workers": config.workers,
        "estimate_params": config.estimate_params,
        "search": asdict(config.search),
        "mpc": {k: v for k, v in asdict(config.mpc).items() if k != "search"},
        "filter": asdict(config.filter),
        "env": {
            "dt": config.defaults.spec.dt,
            "physical": config.defaults.spec.physical,
            "control_box": {
                "lower": config.defaults.spec.control_box.lower,
                "upper": config.defaults.spec.control_box.upper,
            },
            "uncertain_params": list(config.defaults.spec.uncertain_params),
        },
    }
    return _jsonable(out)
