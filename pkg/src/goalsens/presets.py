"""Bundled experiment configs for the 1-D and 2-D advection studies."""
from __future__ import annotations

import copy

from .errors import ConfigError

_1D = {"kind": "1d", "n_cells": 101, "dx": 1.0, "dt": 0.1, "n_steps": 600, "velocity": 1.0,
       "scheme": "upwind"}
_2D = {"kind": "2d"}


def _cfg(model, mode, E, out=None, **method):
    return {"model": dict(model), "method": {"mode": mode, "ensemble_size": E, **method},
            "output": out or {"n_levels": 10, "metrics": True}}


_2D_OUT = {"levels": [0, 14, 28], "metrics": True}
_2D_SINGLE = dict(smoothing_steps=0, weighting=False, orthogonalise=False, regularization=False)
_2D_WINDOWS = dict(windows={"count": 7}, smoothing_steps=3)

PRESETS = {
    # upwind, goal-based weighting against none, with and without re-orthogonalisation
    "upwind-goal-10": _cfg(_1D, "plain", 10),
    "upwind-plain-10": _cfg(_1D, "plain", 10, weighting=False),
    "upwind-goal-reorth-10": _cfg(_1D, "reorth", 10),
    "upwind-reorth-101": _cfg(_1D, "reorth", 101),
    # long horizon: the signal crosses the domain several times
    "nvd-long-reorth-40": _cfg({**_1D, "scheme": "nvd", "n_steps": 3600}, "reorth", 40),
    # mesh refinement at a fixed Courant number
    "nvd-mesh-101": _cfg({**_1D, "scheme": "nvd"}, "plain", 20),
    "nvd-mesh-401": _cfg({**_1D, "scheme": "nvd", "refine_to": 401}, "plain", 20),
    "nvd-mesh-1001": _cfg({**_1D, "scheme": "nvd", "refine_to": 1001}, "plain", 20),
    # one-step windows swept backwards, and independent windows
    "nvd-windows-5": _cfg({**_1D, "scheme": "nvd"}, "windows-sequential", 5,
                           windows={"steps_per_window": 1}),
    "nvd-explicit-25": _cfg({**_1D, "scheme": "nvd"}, "windows-explicit", 25,
                             windows={"steps_per_window": 1}),
    # level-0 peak against ensemble size
    "nvd-sweep": {**_cfg({**_1D, "scheme": "nvd"}, "reorth", 10),
                  "sweep": {"ensemble_sizes": [10, 20, 30, 40, 50, 60, 70, 80, 90, 101],
                            "variants": ["goal+reorth", "non-goal+reorth"], "seeds": [0]}},
    # 2-D channel: seven windows with every feature against one bare window
    "2d-windows-20": _cfg(_2D, "windows-sequential", 20, _2D_OUT, **_2D_WINDOWS),
    "2d-single-20": _cfg(_2D, "plain", 20, _2D_OUT, **_2D_SINGLE),
    "2d-windows-40": _cfg(_2D, "windows-sequential", 40, _2D_OUT, **_2D_WINDOWS),
    "2d-single-40": _cfg(_2D, "plain", 40, _2D_OUT, **_2D_SINGLE),
}


def get(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
