"""Calibrate the cosine thresholds used by the acceptance tests.

Both thresholds come from a full-rank run (101 members on 101 cells) of the
nonlinear NVD scheme, compared level by level with the brute-force oracle.
Even at full rank the cosine is below one, because the limiter is not
differentiable at the zero baseline and the ensemble and the oracle probe it
with different perturbations. Each threshold is that best-case cosine minus
a 10% margin.

    theta_1: one-step windows, 600 steps, minimum over all ten levels
    theta_2: re-orthogonalisation every step, 3600 steps, minimum over the
             last seven of ten levels

Run from the repository root; writes tests/calibration.json.
"""
import json
import time
from pathlib import Path

import numpy as np

from goalsens import (Advection1D, Advection1DConfig, EngineConfig, PerturbationConfig,
                      make_windows, run_time_windows, run_with_reorthogonalisation)
from goalsens.oracle import compare_maps, oracle_maps

MARGIN = 0.9
OUT = Path(__file__).resolve().parents[1] / "tests" / "calibration.json"


def cosines(model, maps):
    ref = oracle_maps(model, model.default_functional(), [m.level for m in maps])
    return [compare_maps(ref[m.level], m).cosine_similarity for m in maps]


def main():
    # Unweighted, unsmoothed draws: the only way 101 members stay independent
    # in one-step windows (smoothing on a path mesh has a null mode).
    full_rank = PerturbationConfig(weighting_enabled=False, smoothing_steps=0)

    t = time.time()
    nvd = Advection1D(Advection1DConfig(scheme="nvd"))
    maps = run_time_windows(nvd, nvd.default_functional(), make_windows(nvd.n_steps, 1),
                            "sequential-backward", EngineConfig(ensemble_size=101, perturbation=full_rank))
    c1 = cosines(nvd, maps)
    print(f"windows, 101 members: cosines {np.round(c1, 4).tolist()} ({time.time() - t:.0f} s)")

    t = time.time()
    long = Advection1D(Advection1DConfig(scheme="nvd", n_steps=3600))
    maps = run_with_reorthogonalisation(long, long.default_functional(), EngineConfig(ensemble_size=101))
    c2 = cosines(long, maps)
    print(f"reorth, 3600 steps, 101 members: cosines {np.round(c2, 4).tolist()} ({time.time() - t:.0f} s)")

    record = {
        "margin": MARGIN,
        "theta_1": MARGIN * min(c1),
        "theta_1_cosines": c1,
        "theta_2": MARGIN * min(c2[3:]),
        "theta_2_cosines": c2,
    }
    OUT.write_text(json.dumps(record, indent=2) + "\n")
    print(f"theta_1 = {record['theta_1']:.4f}, theta_2 = {record['theta_2']:.4f} -> {OUT}")


if __name__ == "__main__":
    main()
