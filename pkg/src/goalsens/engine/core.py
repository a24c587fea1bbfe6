"""Ensemble sensitivity maps for a single time window.

For ensemble deviations ``M = (1Psi - Psibar, ..., EPsi - Psibar)`` at a
time level and the functional differences ``d = (1F - Fbar, ..., EF - Fbar)``
the map is ``g = M (M^T M)^-1 d``. The change-of-variables matrix that maps
unit ensemble coordinates onto physical perturbations is never formed.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import linalg
from ..errors import ConfigError, DimensionMismatch, SingularSystem
from ..linalg import RegularizationPolicy
from ..model_api import ForwardModel, Functional, Trajectory
from ..perturbation import PerturbationConfig, PerturbationGenerator


@dataclass
class SensitivityMap:
    """Estimate of ``dF/dPsi^n`` at time level ``level``."""

    level: int
    values: np.ndarray
    time: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise DimensionMismatch("map values must be 1-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("map values must be finite")

    def __len__(self):
        return self.values.shape[0]


@dataclass
class EnsembleMatrix:
    """Deviations ``ePsi^n - Psibar^n`` of ``E`` members at level ``time_level``, shape ``(N, E)``."""

    time_level: int
    columns: np.ndarray

    @classmethod
    def from_states(cls, level, member_states, baseline_state):
        member_states = np.asarray(member_states, dtype=float)
        return cls(level, member_states - np.asarray(baseline_state, dtype=float)[:, None])

    @property
    def size(self) -> int:
        return self.columns.shape[1]


@dataclass
class EngineConfig:
    """Settings shared by all engine modes.

    ``regularization=None`` selects the mode default: on (``alpha_s = 1e-14``)
    for single-window runs, off with time windows or re-orthogonalisation.
    """

    ensemble_size: int = 10
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    regularization: RegularizationPolicy | None = None
    output_levels: Sequence[int] | None = None
    n_output_levels: int = 10
    #: re-orthogonalise every this many steps
    every_n: int = 1
    #: norm of restarted deviations; ``None`` uses the mean initial perturbation norm
    sigma: float | None = None
    #: generate all members against the warm-start map, then run them together
    batch: bool = False
    threads: int = 1
    #: explicit windows: passes, later ones weighted by the previous pass's maps
    explicit_passes: int = 1

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be >= 1")
        if self.every_n < 1:
            raise ConfigError("every_n must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.sigma is not None and not self.sigma > 0:
            raise ConfigError("sigma must be > 0")
        if self.explicit_passes < 1:
            raise ConfigError("explicit_passes must be >= 1")

    def policy(self, default_on: bool) -> RegularizationPolicy:
        if self.regularization is not None:
            return self.regularization
        return RegularizationPolicy() if default_on else RegularizationPolicy.off()

    def levels(self, n_steps: int) -> list[int]:
        if self.output_levels is None:
            return default_output_levels(n_steps, self.n_output_levels)
        levels = sorted(set(int(n) for n in self.output_levels))
        if levels and (levels[0] < 0 or levels[-1] > n_steps):
            raise ConfigError(f"output levels must lie in [0, {n_steps}]")
        return levels


def default_output_levels(n_steps: int, count: int = 10) -> list[int]:
    """``count`` equally spaced levels from 0 to ``n_steps`` inclusive."""
    if n_steps == 0 or count <= 1:
        return [n_steps] if count == 1 else [0]
    return sorted(set(int(round(x)) for x in np.linspace(0, n_steps, count)))


def run_baseline(model: ForwardModel, functional: Functional) -> Trajectory:
    """Unperturbed trajectory with ``Fbar`` recorded."""
    traj = Trajectory(model.run(), model.dt)
    traj.functional_value = functional.evaluate(traj)
    return traj


def assemble_sensitivity_map(M_hat, dFdms, policy: RegularizationPolicy | None = None,
                             level: int | None = None, time: float | None = None):
    """``g = M (M^T M + eps_s I)^-1 dFdms``.

    ``M_hat`` may be an :class:`EnsembleMatrix` or an ``(N, E)`` array. Returns
    a :class:`SensitivityMap` when a level is known, else the raw vector.
    """
    if isinstance(M_hat, EnsembleMatrix):
        level = M_hat.time_level if level is None else level
        M_hat = M_hat.columns
    M_hat = np.asarray(M_hat, dtype=float)
    dFdms = np.asarray(dFdms, dtype=float)
    if M_hat.ndim != 2 or dFdms.shape != (M_hat.shape[1],):
        raise DimensionMismatch(f"ensemble matrix {M_hat.shape} vs dF/dm_s {dFdms.shape}")
    g = M_hat @ linalg.regularized_normal_solve(M_hat, dFdms, policy)
    if level is None:
        return g
    return SensitivityMap(level, g, time)


def compute_dFdms_truncated(level_diffs, level: int, start: int = 0) -> np.ndarray:
    """``(eF - Fbar)|^n`` for every member.

    ``level_diffs[q - start, e]`` holds member ``e``'s per-level functional
    difference ``f_q(ePsi^q) - f_q(Psibar^q)``; the truncated difference
    drops every level before ``level``.
    """
    level_diffs = np.asarray(level_diffs, dtype=float)
    if not start <= level < start + level_diffs.shape[0]:
        raise IndexError(f"level {level} outside recorded range")
    return level_diffs[level - start:].sum(axis=0)


@dataclass
class EnsembleRun:
    """Members of one ensemble advanced from ``start`` to ``end``."""

    start: int
    end: int
    perturbations: np.ndarray
    #: level -> deviations ``(N, E)``
    deviations: dict
    #: ``diffs[q - start]`` = per-level functional differences, shape ``(E,)``
    diffs: np.ndarray
    #: ``lin[q - start]`` = ``M^q^T dF/dPsi^q``
    lin: np.ndarray
    g_start: np.ndarray | None = None
    f_bar: float = 0.0

    @property
    def size(self) -> int:
        return self.perturbations.shape[1]

    @property
    def f_values(self) -> np.ndarray:
        """Member functional values (truncated at ``start``)."""
        return self.f_bar + self.diffs.sum(axis=0)

    def matrix(self, level: int) -> EnsembleMatrix:
        return EnsembleMatrix(level, self.deviations[level])

    def truncated(self, level: int) -> np.ndarray:
        return compute_dFdms_truncated(self.diffs, level, self.start)

    def lin_sum(self, level: int, stop: int) -> np.ndarray:
        """``sum_{q=level}^{stop-1} M^q^T dF/dPsi^q``."""
        return self.lin[level - self.start:stop - self.start].sum(axis=0)


def _advance(model, functional, baseline, X, start, end, record):
    """Step the columns of ``X`` from ``start`` to ``end``; returns (records, diffs, lin)."""
    base = baseline.states
    n_steps = baseline.n_steps
    E = X.shape[1]
    diffs = np.zeros((end - start + 1, E))
    lin = np.zeros((end - start + 1, E))
    records = {}
    for n in range(start, end + 1):
        if n > start:
            X = model.step(X, n - 1)
        if n in record:
            records[n] = X - base[n][:, None]
        if functional.depends_on(n, n_steps):
            diffs[n - start] = (functional.term(X, n, n_steps, baseline.dt)
                                - functional.term(base[n], n, n_steps, baseline.dt))
            dev = records[n] if n in records else X - base[n][:, None]
            lin[n - start] = dev.T @ functional.partial(n, model.n_dof, n_steps, baseline.dt)
    return records, diffs, lin


def advance_members(model, functional, baseline, X, start, end, record=(), threads=1):
    """Run the member states ``X`` (``(N, E)``) through ``[start, end]``.

    With ``threads > 1`` the columns are split into contiguous chunks run
    concurrently; results are stitched back in column order, so output does
    not depend on the thread count.
    """
    record = set(record)
    E = X.shape[1]
    if threads <= 1 or E < 2:
        return _advance(model, functional, baseline, X, start, end, record)
    bounds = np.linspace(0, E, min(threads, E) + 1).astype(int)
    chunks = [X[:, a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: _advance(model, functional, baseline, c, start, end, record), chunks))
    records = {n: np.concatenate([p[0][n] for p in parts], axis=1) for n in parts[0][0]}
    diffs = np.concatenate([p[1] for p in parts], axis=1)
    lin = np.concatenate([p[2] for p in parts], axis=1)
    return records, diffs, lin


def solve_ensembles(model: ForwardModel, functional: Functional, baseline: Trajectory, g0,
                    cfg: EngineConfig, *, start: int = 0, end: int | None = None, window: int = 0,
                    record: Sequence[int] = (), dfdm: Callable[[EnsembleRun], np.ndarray] | None = None,
                    policy: RegularizationPolicy | None = None) -> EnsembleRun:
    """Create the perturbations and run the members through ``[start, end]``.

    Members are generated one at a time. After each member the map at
    ``start`` is refreshed from members ``1..e`` and weights the next
    perturbation. ``dfdm(run)`` supplies ``dF/dm_s`` at ``start`` for the
    refresh; by default it is the truncated functional difference. With
    ``cfg.batch``, or when weighting is disabled, every perturbation is drawn
    against ``g0`` and the members are run together afterwards.

    Returns
    -------
    EnsembleRun
        ``g_start`` holds the last refreshed map (``None`` if never refreshed).
    """
    end = model.n_steps if end is None else end
    E = cfg.ensemble_size
    record = set(record) | {start, end}
    dfdm = dfdm or (lambda run: run.truncated(start))
    gen = PerturbationGenerator(model.adjacency, cfg.perturbation, model.scaling_rule, window)
    base0 = baseline.states[start]
    f_bar = baseline.functional_value or 0.0

    if cfg.batch or not cfg.perturbation.weighting_enabled:
        for _ in range(E):
            gen.next(g0)
        P = gen.matrix()
        recs, diffs, lin = advance_members(model, functional, baseline, base0[:, None] + P,
                                           start, end, record, cfg.threads)
        return EnsembleRun(start, end, P, recs, diffs, lin, None, f_bar)

    g_cur = g0
    cols, diffs, lin = [], [], []
    recs: dict = {n: [] for n in record}
    run = None
    for _ in range(E):
        dm = gen.next(g_cur)
        r, d, li = _advance(model, functional, baseline, (base0 + dm)[:, None], start, end, record)
        cols.append(dm)
        diffs.append(d)
        lin.append(li)
        for n in record:
            recs[n].append(r[n])
        run = EnsembleRun(start, end, np.column_stack(cols),
                          {n: np.concatenate(v, axis=1) for n, v in recs.items()},
                          np.concatenate(diffs, axis=1), np.concatenate(lin, axis=1), None, f_bar)
        try:
            g_cur = assemble_sensitivity_map(run.deviations[start], dfdm(run), policy)
        except SingularSystem:
            # the refresh only steers the next draw; keep the last usable map
            pass
    run.g_start = g_cur
    return run


def run_single_window_goalbased(model: ForwardModel, functional: Functional,
                                cfg: EngineConfig) -> list[SensitivityMap]:
    """Goal-based maps at every output level from a single ensemble over the whole horizon."""
    if cfg.ensemble_size < 1:
        raise ConfigError("ensemble size must be >= 1")
    policy = cfg.policy(default_on=True)
    baseline = run_baseline(model, functional)
    levels = cfg.levels(model.n_steps)
    g0 = np.ones(model.n_dof)
    run = solve_ensembles(model, functional, baseline, g0, cfg, record=levels, policy=policy)
    return [assemble_sensitivity_map(run.deviations[n], run.truncated(n), policy, n, model.time(n))
            for n in levels]
