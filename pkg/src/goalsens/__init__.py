"""Goal-based sensitivity maps from ensembles of perturbed forward runs."""
from .engine import (EngineConfig, SensitivityMap, TimeWindow, assemble_sensitivity_map,
                     make_windows, run_baseline, run_single_window_goalbased, run_time_windows,
                     run_with_reorthogonalisation, solve_ensembles)
from .linalg import RegularizationPolicy
from .model_api import ForwardModel, FunctionalSpec, MeshAdjacency, Trajectory
from .models import Advection1D, Advection1DConfig, Advection2D, Advection2DConfig
from .oracle import OracleConfig, compare_maps, direct_sensitivity
from .perturbation import PerturbationConfig

__version__ = "0.1.0"
