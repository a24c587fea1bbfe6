"""Ensemble sensitivity-map engine."""
from .core import (EngineConfig, EnsembleMatrix, EnsembleRun, SensitivityMap, advance_members,
                   assemble_sensitivity_map, compute_dFdms_truncated, default_output_levels,
                   run_baseline, run_single_window_goalbased, solve_ensembles)
from .reorth import ReorthTransform, reorthogonalise, run_with_reorthogonalisation
from .sweep import SweepRow, convergence_sweep
from .windows import TimeWindow, check_windows, make_windows, run_time_windows

__all__ = [
    "EngineConfig", "EnsembleMatrix", "EnsembleRun", "SensitivityMap", "advance_members",
    "assemble_sensitivity_map", "compute_dFdms_truncated", "default_output_levels",
    "run_baseline", "run_single_window_goalbased", "solve_ensembles", "ReorthTransform",
    "reorthogonalise", "run_with_reorthogonalisation", "TimeWindow", "check_windows",
    "make_windows", "run_time_windows", "SweepRow", "convergence_sweep",
]
