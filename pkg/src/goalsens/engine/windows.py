"""Time windows processed backwards in time.

Window ``w`` covers levels ``[b, l)``. Its members perturb the baseline state
at ``b`` and run to ``l``. With ``g^l`` known from window ``w + 1``, the
derivative with respect to the window's ensemble coordinates at ``l`` is
``M^l^T g^l``, and for every ``k`` in ``[b, l)``::

    g^k = M^k (M^k^T M^k)^-1 (M^l^T g^l + sum_{q=k}^{l-1} M^q^T dF/dPsi^q + dF/dm_s^k)

The last window uses the truncated functional differences instead.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, WindowMisalignment
from ..model_api import ForwardModel, Functional
from .core import (EngineConfig, EnsembleRun, SensitivityMap, assemble_sensitivity_map,
                   run_baseline, solve_ensembles)

MODES = ("sequential-backward", "explicit")


@dataclass(frozen=True)
class TimeWindow:
    """Levels ``[start_level, end_level)``."""

    index: int
    start_level: int
    end_level: int

    @property
    def n_steps(self) -> int:
        return self.end_level - self.start_level


def make_windows(n_steps: int, steps_per_window: int | None = None,
                 count: int | None = None) -> list[TimeWindow]:
    """Equal windows of ``steps_per_window`` steps, or ``count`` equal windows."""
    if (steps_per_window is None) == (count is None):
        raise ConfigError("give exactly one of steps_per_window and count")
    if count is not None:
        if count < 1 or n_steps % count:
            raise WindowMisalignment(f"{n_steps} steps cannot be split into {count} equal windows")
        steps_per_window = n_steps // count
    if steps_per_window < 1 or n_steps % steps_per_window:
        raise WindowMisalignment(f"{n_steps} steps are not a multiple of {steps_per_window}")
    return [TimeWindow(w, b, b + steps_per_window)
            for w, b in enumerate(range(0, n_steps, steps_per_window))]


def check_windows(windows, n_steps: int) -> list[TimeWindow]:
    windows = sorted(windows, key=lambda w: w.start_level)
    if not windows:
        raise WindowMisalignment("no windows given")
    if windows[0].start_level != 0 or windows[-1].end_level != n_steps:
        raise WindowMisalignment(f"windows must span [0, {n_steps}]")
    for a, b in zip(windows, windows[1:]):
        if a.end_level != b.start_level:
            raise WindowMisalignment(f"gap or overlap between levels {a.end_level} and {b.start_level}")
    for w in windows:
        if w.n_steps < 1:
            raise WindowMisalignment(f"window {w.index} has no steps")
    return windows


def _window_maps(model, functional, run: EnsembleRun, g_end, levels, policy, last):
    """Maps at ``levels`` (all within the window) from a finished ensemble run."""
    b, l = run.start, run.end
    out = {}
    if not last:
        base = run.deviations[l].T @ g_end
    ctrl = functional.partial_wrt_controls(b, model.n_dof)
    for k in levels:
        if last:
            d = run.truncated(k)
        else:
            d = base + run.lin_sum(k, l)
        if ctrl is not None:
            d = d + run.perturbations.T @ ctrl
        out[k] = assemble_sensitivity_map(run.deviations[k], d, policy, k, model.time(k))
    return out


def _dfdm_for(window_end, g_end, functional, model, last):
    if last:
        return None

    def dfdm(run):
        d = run.deviations[window_end].T @ g_end + run.lin_sum(run.start, window_end)
        ctrl = functional.partial_wrt_controls(run.start, model.n_dof)
        if ctrl is not None:
            d = d + run.perturbations.T @ ctrl
        return d
    return dfdm


def run_time_windows(model: ForwardModel, functional: Functional, windows, mode: str,
                     cfg: EngineConfig, prior_maps: dict | None = None) -> list[SensitivityMap]:
    """Maps at the output levels using time windows.

    ``mode="sequential-backward"`` handles windows from last to first; each
    window's perturbations are weighted first by the map passed back from
    the following window and then by maps refreshed from its own members.
    ``mode="explicit"`` runs every window independently (concurrently when
    ``cfg.threads > 1``), weighted by ``prior_maps[l]`` when given and
    weighting is enabled, else unweighted, and combines them afterwards.
    With ``cfg.explicit_passes > 1`` each later pass is weighted by the maps
    of the pass before.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown window mode {mode!r}")
    windows = check_windows(windows, model.n_steps)
    policy = cfg.policy(default_on=False)
    baseline = run_baseline(model, functional)
    levels = cfg.levels(model.n_steps)
    last_index = len(windows) - 1

    if mode == "sequential-backward":
        maps = {}
        g_end = None
        for pos in range(last_index, -1, -1):
            w = windows[pos]
            last = pos == last_index
            inside = [k for k in levels if w.start_level <= k < w.end_level]
            wanted = sorted(set(inside) | {w.start_level} | ({w.end_level} if last else set()))
            warm = np.ones(model.n_dof) if last else g_end
            run = solve_ensembles(model, functional, baseline, warm, cfg, start=w.start_level,
                                  end=w.end_level, window=w.index, record=wanted,
                                  dfdm=_dfdm_for(w.end_level, g_end, functional, model, last),
                                  policy=policy)
            got = _window_maps(model, functional, run, g_end, wanted, policy, last)
            maps.update(got)
            g_end = got[w.start_level].values
        return [maps[k] for k in levels]

    prior = prior_maps
    for _ in range(cfg.explicit_passes):
        maps = _explicit_pass(model, functional, baseline, windows, levels, cfg, policy, prior)
        prior = maps
    return [maps[k] for k in levels]


def _explicit_pass(model, functional, baseline, windows, levels, cfg, policy, prior):
    last_index = len(windows) - 1
    serial = EngineConfig(**{**cfg.__dict__, "batch": True, "threads": 1})

    def run_window(pos):
        w = windows[pos]
        inside = [k for k in levels if w.start_level <= k < w.end_level]
        wanted = sorted(set(inside) | {w.start_level, w.end_level})
        warm = None
        if cfg.perturbation.weighting_enabled and prior is not None and w.end_level in prior:
            warm = getattr(prior[w.end_level], "values", prior[w.end_level])
        return solve_ensembles(model, functional, baseline, warm, serial, start=w.start_level,
                               end=w.end_level, window=w.index, record=wanted, policy=policy)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            runs = list(pool.map(run_window, range(len(windows))))
    else:
        runs = [run_window(p) for p in range(len(windows))]

    maps = {}
    g_end = None
    for pos in range(last_index, -1, -1):
        w = windows[pos]
        last = pos == last_index
        inside = [k for k in levels if w.start_level <= k < w.end_level]
        wanted = sorted(set(inside) | {w.start_level} | ({w.end_level} if last else set()))
        got = _window_maps(model, functional, runs[pos], g_end, wanted, policy, last)
        maps.update(got)
        g_end = got[w.start_level].values
    return maps
