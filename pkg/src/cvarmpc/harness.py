"""Campaign execution, persistence and Table-style statistics reporting."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import ExperimentConfig, resolved_dict
from .dynamics import default_specs
from .mpc import EpisodeRecord, run_episode
from .risk import RiskLevel, RiskSummary, risk_summary

__all__ = ["CampaignSummary", "run_campaign", "describe", "stats", "episode_seed"]

OUTPUT_ROOT_ENV = "CVARMPC_OUTPUT_ROOT"


@dataclass(frozen=True)
class CampaignSummary:
    cells: dict  # cell name -> RiskSummary
    episode_counts: dict
    wall_clock_s: float


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def episode_seed(root_seed: int, cell_index: int, episode_index: int) -> np.random.SeedSequence:
    """Seed derivation recorded in the manifest: (root, cell index, episode index)."""
    return np.random.SeedSequence(entropy=root_seed, spawn_key=(cell_index, episode_index))


def _output_root(config: ExperimentConfig) -> Path:
    base = Path(config.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not base.is_absolute():
        return Path(root) / base
    return base


def write_trajectory_csv(path: Path, record: EpisodeRecord) -> None:
    """Fixed trajectory schema: step, state, control, belief mean, belief 3sigma, stage cost.

    One row per timestep plus a final row for the terminal state, whose
    control and stage-cost cells are left empty.
    """
    n_x = record.states.shape[1]
    n_u = record.controls.shape[1]
    n_b = record.belief_mean.shape[1]
    header = (
        ["step"]
        + [f"x{i}" for i in range(n_x)]
        + [f"u{i}" for i in range(n_u)]
        + [f"belief_mean{i}" for i in range(n_b)]
        + [f"belief_3sigma{i}" for i in range(n_b)]
        + ["stage_cost"]
    )
    length = record.episode_length
    lines = [",".join(header)]
    for t in range(length + 1):
        row = [str(t)]
        row += [_fmt(v) for v in record.states[t]]
        row += [_fmt(v) for v in record.controls[t]] if t < length else [""] * n_u
        row += [_fmt(v) for v in record.belief_mean[t]]
        row += [_fmt(v) for v in record.belief_std3[t]]
        row += [_fmt(record.stage_costs[t])] if t < length else [""]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _episode_task(args) -> EpisodeRecord:
    config, level, episode_index, cell_index = args
    seed = episode_seed(config.root_seed, cell_index, episode_index)
    return run_episode(
        config.defaults,
        config.mode,
        config.mpc,
        config.filter,
        seed,
        control_noise_std=level,
        estimate_params=config.estimate_params,
    )


def _summary_payload(cell: str, gamma: float, summary: RiskSummary, count: int, wall: float) -> dict:
    return {
        "cell": cell,
        "gamma": gamma,
        "episodes": count,
        "mean": summary.mean,
        "var": summary.var_hat,
        "cvar": summary.cvar_hat,
        "wall_clock_s": wall,
    }


def run_campaign(config: ExperimentConfig, log=print) -> CampaignSummary:
    """Run every cell of the experiment matrix and persist all artifacts.

    Per cell: one trajectory CSV per episode, a costs CSV (one total per
    line) and a summary JSON with Mean/VaR/CVaR at the configured risk level.
    A manifest records seeds and per-cell status; failed cells leave completed
    ones intact and are marked in the manifest.
    """
    start = time.monotonic()
    outdir = _output_root(config)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "resolved_config.json").write_text(json.dumps(resolved_dict(config), indent=2) + "\n")

    gamma = config.gamma
    m_unc = config.search.n_uncertainty
    if m_unc * (1.0 - gamma) < 5:
        log(
            f"warning: M(1-gamma) = {m_unc * (1.0 - gamma):.2f} < 5; "
            "the per-policy CVaR estimator has high variance"
        )

    cells = config.cell_names()
    levels = list(config.noise_levels) if config.mode == "control_noise" else [0.0]
    manifest = {
        "root_seed": config.root_seed,
        "cells": [],
    }
    summaries = {}
    counts = {}
    failed = False

    for cell_index, (cell, level) in enumerate(zip(cells, levels)):
        cell_dir = outdir / cell
        cell_dir.mkdir(parents=True, exist_ok=True)
        cell_start = time.monotonic()
        cell_entry = {
            "name": cell,
            "index": cell_index,
            "noise_level": level,
            "episodes": [
                {"index": i, "seed": {"root": config.root_seed, "cell": cell_index, "episode": i}}
                for i in range(config.episodes)
            ],
            "status": "running",
        }
        try:
            tasks = [(config, level, i, cell_index) for i in range(config.episodes)]
            if config.workers > 1:
                with ProcessPoolExecutor(max_workers=config.workers) as pool:
                    records: List[EpisodeRecord] = list(pool.map(_episode_task, tasks))
            else:
                records = [_episode_task(task) for task in tasks]
            for i, record in enumerate(records):
                write_trajectory_csv(cell_dir / f"episode_{i:03d}_trajectory.csv", record)
            totals = np.array([record.total_cost for record in records])
            (cell_dir / "costs.csv").write_text("\n".join(_fmt(v) for v in totals) + "\n")
            summary = risk_summary(totals, RiskLevel(gamma))
            wall = time.monotonic() - cell_start
            (cell_dir / "summary.json").write_text(
                json.dumps(_summary_payload(cell, gamma, summary, len(records), wall), indent=2) + "\n"
            )
            summaries[cell] = summary
            counts[cell] = len(records)
            cell_entry["status"] = "done"
            log(
                f"{cell}: {len(records)} episodes, mean {summary.mean:.1f}, "
                f"VaR {summary.var_hat:.1f}, CVaR {summary.cvar_hat:.1f}"
            )
        except Exception as exc:  # noqa: BLE001 - cell failures must not kill the campaign
            cell_entry["status"] = "failed"
            cell_entry["error"] = f"{type(exc).__name__}: {exc}"
            failed = True
            log(f"{cell}: FAILED ({exc})")
        manifest["cells"].append(cell_entry)

    wall_total = time.monotonic() - start
    manifest["wall_clock_s"] = wall_total
    manifest["failed"] = failed
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    if failed:
        raise RuntimeError("one or more cells failed; see manifest.json")
    return CampaignSummary(cells=summaries, episode_counts=counts, wall_clock_s=wall_total)


def describe(system: str) -> str:
    """Human-readable dump of a system's shipped defaults."""
    table = default_specs()
    if system not in table:
        raise KeyError(f"unknown system {system!r}, expected one of {sorted(table)}")
    d = table[system]
    lines = [
        f"system: {system}",
        f"dt: {d.spec.dt}",
        "physical:",
    ]
    lines += [f"  {k}: {v}" for k, v in d.spec.physical.items()]
    lines += [
        f"control box: {d.spec.control_box.lower.tolist()} .. {d.spec.control_box.upper.tolist()}",
        f"uncertain parameters: {list(d.spec.uncertain_params)}",
        f"Q diag: {d.cost.q_diag.tolist()}",
        f"R diag: {d.cost.r_diag.tolist()}",
        f"x target: {d.cost.x_target.tolist()}",
        f"x0: {d.x0.tolist()}",
        f"initial state prior: mean {d.init_state_mean.tolist()}, cov diag {d.init_state_cov_diag.tolist()}",
        f"parameter prior: mean {d.param_prior_mean.tolist()}, cov diag {d.param_prior_cov_diag.tolist()}",
        f"true parameter: {d.true_param.tolist()}",
        f"measurement noise diag: {d.measurement_noise_diag.tolist()}",
        f"artificial process noise diag: {d.artificial_noise_diag.tolist()}",
    ]
    return "\n".join(lines)


def stats(csv_path, gamma: float) -> RiskSummary:
    """Mean/VaR/CVaR of a cost list stored one value per line."""
    path = Path(csv_path)
    if not path.exists():
        raise FileNotFoundError(f"cost file not found: {path}")
    values = [float(line) for line in path.read_text().split() if line.strip()]
    if not values:
        raise ValueError("no samples")
    return risk_summary(np.array(values), RiskLevel(gamma))
