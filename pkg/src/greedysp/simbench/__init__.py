"""Simulation benchmark: random Gaussian SEMs, a PC baseline, metrics and grids."""

from .bench import TrialRecord, aggregate, load_grid, run_benchmark
from .metrics import Recovery, recovery
from .pc import pc_baseline
from .sem import SemModel, random_gaussian_dag, sample

__all__ = ["Recovery", "SemModel", "TrialRecord", "aggregate", "load_grid", "pc_baseline",
           "random_gaussian_dag", "recovery", "run_benchmark", "sample"]
