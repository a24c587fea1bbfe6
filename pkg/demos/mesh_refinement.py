"""Mesh refinement at a fixed Courant number.

The same channel is resolved with up to 1001 cells, with the time
step shrunk to keep the Courant number at 0.1. Each cell then holds less of
the tracer, so the per-cell sensitivity at t = 0 falls. Pass --full to
include the 1001-cell mesh (its brute-force reference takes minutes).
"""
import sys

import numpy as np

from goalsens import Advection1D, Advection1DConfig, EngineConfig, run_single_window_goalbased
from goalsens.oracle import compare_maps, direct_sensitivity

meshes = (101, 401, 1001) if "--full" in sys.argv else (101, 401)
for n in meshes:
    model = Advection1D(Advection1DConfig(scheme="nvd").refined(n))
    goal = model.default_functional()
    g = run_single_window_goalbased(model, goal, EngineConfig(ensemble_size=20, output_levels=[0]))[0]
    ref = direct_sensitivity(model, goal, 0)
    c = compare_maps(ref, g)
    print(f"{n:5d} cells  max|g0| {np.max(np.abs(g.values)):.4f} (reference {np.max(np.abs(ref.values)):.4f})  "
          f"peak offset {c.peak_offset_cells} cells  rel. L2 error {c.l2_rel_error:.3f}")
