"""Risk-sensitive sampling-based MPC: path-space CVaR optimization for
stochastic dynamical systems, with an optional particle-filter belief over
states and model parameters."""

from .belief import Belief, FilterConfig
from .dynamics import EnvSpec, Environment, QuadraticCost, Trajectory, default_specs
from .mpc import EpisodeRecord, MpcConfig, run_episode, shift
from .risk import (
    CostSamples,
    RiskLevel,
    RiskSummary,
    cvar_oracle_min_form,
    empirical_cvar,
    empirical_var,
    risk_summary,
)
from .sampling import ControlBox, NaturalParams, PolicyDraw, sample_policies
from .search import SearchConfig, StepSchedule, UncertaintySamples, optimize
from .shaping import ShapeSpec, shape_weights

__version__ = "0.1.0"
