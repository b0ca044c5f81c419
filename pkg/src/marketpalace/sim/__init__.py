"""Deterministic discrete-event simulator of listing propagation."""

from marketpalace.sim.model import SimConfig, StatsSummary, TrialResult
from marketpalace.sim.engine import (
    UnreachableError,
    run_experiment,
    run_scenario,
    run_trial,
)
from marketpalace.sim.stats import summarize
from marketpalace.sim.sweep import sweep, write_sweep_csv

__all__ = [
    "SimConfig",
    "StatsSummary",
    "TrialResult",
    "UnreachableError",
    "run_experiment",
    "run_scenario",
    "run_trial",
    "summarize",
    "sweep",
    "write_sweep_csv",
]
