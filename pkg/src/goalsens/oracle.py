"""Brute-force reference sensitivities by perturbing one control at a time."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine.core import SensitivityMap, run_baseline
from .errors import ConfigError, DimensionMismatch
from .model_api import ForwardModel, Functional, Trajectory

MODES = ("forward-difference", "central-difference")


@dataclass(frozen=True)
class OracleConfig:
    #: perturbation size relative to ``max(1, max|Psibar^n|)``
    fd_epsilon: float = 1e-6
    mode: str = "forward-difference"
    #: controls perturbed together in one batched run
    chunk: int = 256
    threads: int = 1

    def __post_init__(self):
        if not self.fd_epsilon > 0:
            raise ConfigError("fd_epsilon must be > 0")
        if self.mode not in MODES:
            raise ConfigError(f"unknown oracle mode {self.mode!r}")
        if self.chunk < 1 or self.threads < 1:
            raise ConfigError("chunk and threads must be >= 1")

    @classmethod
    def for_model(cls, model: ForwardModel, **kw) -> "OracleConfig":
        """Central differences for nonlinear models, forward differences otherwise."""
        kw.setdefault("mode", "forward-difference" if model.linear else "central-difference")
        return cls(**kw)


def _truncated_f(model, functional, baseline, X, level):
    """``F|^level`` minus ``Fbar`` for each column of ``X`` (states at ``level``)."""
    Nt = baseline.n_steps
    dt = baseline.dt
    total = np.zeros(X.shape[1])
    for n in range(level, Nt + 1):
        if n > level:
            X = model.step(X, n - 1)
        if functional.depends_on(n, Nt):
            total += functional.term(X, n, Nt, dt) - functional.term(baseline.states[n], n, Nt, dt)
    return total


def direct_sensitivity(model: ForwardModel, functional: Functional, level: int,
                       config: OracleConfig | None = None,
                       baseline: Trajectory | None = None) -> SensitivityMap:
    """``dF/dPsi^level`` by finite differences on every degree of freedom.

    Entry ``i`` perturbs the baseline state at ``level`` in entry ``i`` only,
    runs to the final time and differences the truncated functional. For
    linear models the result is exact whatever the step size.
    """
    config = config or OracleConfig.for_model(model)
    baseline = baseline if baseline is not None else run_baseline(model, functional)
    if not 0 <= level <= baseline.n_steps:
        raise ConfigError(f"level {level} outside [0, {baseline.n_steps}]")
    psi = baseline.states[level]
    N = psi.shape[0]
    h = config.fd_epsilon * max(1.0, float(np.max(np.abs(psi))))
    central = config.mode == "central-difference"

    def chunk(a):
        b = min(a + config.chunk, N)
        eye = np.zeros((N, b - a))
        eye[np.arange(a, b), np.arange(b - a)] = h
        up = _truncated_f(model, functional, baseline, psi[:, None] + eye, level)
        if central:
            down = _truncated_f(model, functional, baseline, psi[:, None] - eye, level)
            return (up - down) / (2 * h)
        return up / h

    starts = range(0, N, config.chunk)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(a) for a in starts]
    return SensitivityMap(level, np.concatenate(parts), model.time(level))


def oracle_maps(model, functional, levels, config=None) -> dict:
    """``{level: SensitivityMap}`` for several levels sharing one baseline run."""
    baseline = run_baseline(model, functional)
    return {n: direct_sensitivity(model, functional, n, config, baseline) for n in levels}


@dataclass(frozen=True)
class MapComparison:
    l2_rel_error: float
    cosine_similarity: float
    peak_offset_cells: int
    #: cosine undefined because a map is identically zero (reported as 0)
    degenerate: bool = False


def compare_maps(a, b) -> MapComparison:
    """Metrics of ``b`` against the reference ``a``.

    ``l2_rel_error = ||b - a|| / ||a||``; ``peak_offset_cells`` is the
    index distance between the entries of largest magnitude.
    """
    va = np.asarray(getattr(a, "values", a), dtype=float)
    vb = np.asarray(getattr(b, "values", b), dtype=float)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"maps have shapes {va.shape} and {vb.shape}")
    la = getattr(a, "level", None)
    lb = getattr(b, "level", None)
    if la is not None and lb is not None and la != lb:
        raise DimensionMismatch(f"maps are at different levels {la} and {lb}")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    diff = np.linalg.norm(vb - va)
    if na > 0:
        err = float(diff / na)
    else:
        err = 0.0 if diff == 0 else float("inf")
    degenerate = na == 0 or nb == 0
    cos = 0.0 if degenerate else float(va @ vb / (na * nb))
    offset = int(abs(int(np.argmax(np.abs(vb))) - int(np.argmax(np.abs(va)))))
    return MapComparison(err, cos, offset, degenerate)
