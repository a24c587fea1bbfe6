"""Interfaces between the sensitivity engine and a forward model.

A forward model advances a state vector (cells or nodes) one time step at a
time. States are plain float arrays of shape ``(N,)``; every model also
accepts a batch of shape ``(N, B)`` and advances each column independently,
which is how ensembles are stepped together.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BlowUp, ConfigError, DimensionMismatch


class MeshAdjacency:
    """Symmetric neighbour lists of the entities carrying the solution.

    Parameters
    ----------
    neighbors : sequence of sequences of int
        ``neighbors[i]`` lists the entities adjacent to entity ``i``.
    extent : int
        Maximum number of cells across the domain in any direction. Used by
        the automatic smoothing-step rule.
    """

    def __init__(self, neighbors: Sequence[Sequence[int]], extent: int):
        self.neighbors = [np.asarray(sorted(set(int(j) for j in nb)), dtype=int) for nb in neighbors]
        n = len(self.neighbors)
        for i, nb in enumerate(self.neighbors):
            if nb.size and (nb.min() < 0 or nb.max() >= n):
                raise ConfigError(f"entity {i} has out-of-range neighbours")
            if i in nb:
                raise ConfigError(f"entity {i} lists itself as a neighbour")
            for j in nb:
                if i not in self.neighbors[j]:
                    raise ConfigError(f"adjacency not symmetric: {i}->{j} but not {j}->{i}")
        if extent < 1:
            raise ConfigError("extent must be >= 1")
        self.extent = int(extent)

    def __len__(self):
        return len(self.neighbors)

    @property
    def valency(self) -> np.ndarray:
        return np.array([nb.size for nb in self.neighbors], dtype=int)

    @classmethod
    def line(cls, n: int, periodic: bool = False) -> "MeshAdjacency":
        """Cells of a 1-D mesh ordered left to right."""
        if n < 1:
            raise ConfigError("need at least one cell")
        nbrs = []
        for i in range(n):
            nb = []
            if i > 0 or (periodic and n > 2):
                nb.append((i - 1) % n)
            if i < n - 1 or (periodic and n > 2):
                nb.append((i + 1) % n)
            nbrs.append(nb)
        return cls(nbrs, extent=n)

    @classmethod
    def grid(cls, nx: int, ny: int) -> "MeshAdjacency":
        """Nodes of a structured ``nx`` by ``ny`` grid, index ``j * nx + i``, 4-connected."""
        nbrs = []
        for j in range(ny):
            for i in range(nx):
                nb = []
                if i > 0:
                    nb.append(j * nx + i - 1)
                if i < nx - 1:
                    nb.append(j * nx + i + 1)
                if j > 0:
                    nb.append((j - 1) * nx + i)
                if j < ny - 1:
                    nb.append((j + 1) * nx + i)
                nbrs.append(nb)
        # node grid: cells across = nodes - 1
        return cls(nbrs, extent=max(nx, ny) - 1)


@dataclass
class Trajectory:
    """States ``Psi^0 .. Psi^Nt`` of one forward run, shape ``(Nt + 1, N)``."""

    states: np.ndarray
    dt: float
    functional_value: float | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2:
            raise DimensionMismatch("states must have shape (n_levels, N)")

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n_dof(self) -> int:
        return self.states.shape[1]

    def __getitem__(self, level: int) -> np.ndarray:
        return self.states[level]


class ForwardModel:
    """Base class for explicit one-level time-stepping models.

    Subclasses set ``n_dof``, ``n_steps``, ``dt``, ``adjacency``,
    ``scaling_rule`` and implement :meth:`initial_condition`,
    :meth:`_step` and :meth:`coordinates`.
    """

    n_dof: int
    n_steps: int
    dt: float
    adjacency: MeshAdjacency
    #: ``"norm-1d"`` or ``"range-2d3d"``, the default perturbation scaling rule
    scaling_rule: str = "norm-1d"
    #: True when ``step`` is an affine map of the state
    linear: bool = False

    def initial_condition(self) -> np.ndarray:
        raise NotImplementedError

    def coordinates(self) -> np.ndarray:
        """Coordinates of each degree of freedom, shape ``(N, d)``."""
        raise NotImplementedError

    def _step(self, state: np.ndarray, level: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, state, level: int = 0) -> np.ndarray:
        """Advance ``state`` (``(N,)`` or ``(N, B)``) from ``level`` to ``level + 1``."""
        state = np.asarray(state, dtype=float)
        if state.shape[0] != self.n_dof:
            raise DimensionMismatch(f"state has {state.shape[0]} entries, model has {self.n_dof}")
        with np.errstate(over="ignore", invalid="ignore"):
            new = self._step(state, level)
        if not np.all(np.isfinite(new)):
            raise BlowUp(f"non-finite values after step {level} -> {level + 1}")
        return new

    def advance(self, state, start: int, stop: int) -> np.ndarray:
        """Step from level ``start`` to level ``stop``."""
        for n in range(start, stop):
            state = self.step(state, n)
        return state

    def run(self, state=None, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Return every state from ``start`` to ``stop`` (inclusive) as ``(stop - start + 1, N, ...)``."""
        if state is None:
            state = self.initial_condition()
        stop = self.n_steps if stop is None else stop
        out = np.empty((stop - start + 1,) + np.shape(state))
        out[0] = state
        for n in range(start, stop):
            out[n - start + 1] = self.step(out[n - start], n)
        return out

    def time(self, level: int) -> float:
        return level * self.dt


class Functional:
    """A goal ``F`` that is a sum of per-level terms ``F = sum_q f_q(Psi^q)``.

    The separable form gives the truncated evaluation ``F|^n`` for free:
    levels before ``n`` take their baseline values and cancel in
    ``F|^n - Fbar``.
    """

    def term(self, state: np.ndarray, level: int, n_steps: int, dt: float):
        """``f_q(Psi^q)``; a batch ``(N, B)`` returns shape ``(B,)``."""
        raise NotImplementedError

    def partial(self, level: int, n_dof: int, n_steps: int, dt: float) -> np.ndarray:
        """Direct partial ``dF/dPsi^q`` (independent of the state for linear goals)."""
        raise NotImplementedError

    def depends_on(self, level: int, n_steps: int) -> bool:
        """False when ``f_q`` is identically zero at ``level``."""
        return True

    def partial_wrt_controls(self, level: int, n_dof: int):
        """Explicit ``dF/dm`` at ``level``; ``None`` means zero."""
        return None

    def evaluate(self, traj: Trajectory) -> float:
        return float(sum(self.term(traj.states[q], q, traj.n_steps, traj.dt)
                         for q in range(traj.n_steps + 1) if self.depends_on(q, traj.n_steps)))

    def partial_wrt_state(self, traj: Trajectory, q: int) -> np.ndarray:
        if not 0 <= q <= traj.n_steps:
            raise IndexError(f"level {q} outside 0..{traj.n_steps}")
        return self.partial(q, traj.n_dof, traj.n_steps, traj.dt)


def default_target_index(n_cells: int) -> int:
    """0-based index of cell ``floor(0.85 N)`` in 1-based left-to-right numbering."""
    return (85 * n_cells) // 100 - 1


@dataclass
class FunctionalSpec(Functional):
    """Built-in goals.

    ``kind`` is one of

    ``"point-final"``
        ``F = Psi^{Nt}[target_index]``.
    ``"time-integral"``
        ``F = sum_{k=0}^{Nt} dt * Psi^k[target_index]``.
    ``"custom"``
        ``F = sum_k weights[k] . Psi^k`` with ``weights`` of shape ``(Nt + 1, N)``.

    ``target_index`` is 0-based.
    """

    kind: str = "point-final"
    target_index: int | None = None
    weights: np.ndarray | None = field(default=None, repr=False)

    KINDS = ("point-final", "time-integral", "custom")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown functional kind {self.kind!r}")
        if self.kind == "custom":
            if self.weights is None:
                raise ConfigError("custom functional needs weights")
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.ndim != 2:
                raise ConfigError("custom weights must have shape (n_levels, N)")
        elif self.target_index is None or self.target_index < 0:
            raise ConfigError(f"{self.kind} functional needs a non-negative target_index")

    @classmethod
    def point_final(cls, index: int) -> "FunctionalSpec":
        return cls("point-final", target_index=int(index))

    @classmethod
    def time_integral(cls, index: int) -> "FunctionalSpec":
        return cls("time-integral", target_index=int(index))

    @classmethod
    def custom(cls, weights) -> "FunctionalSpec":
        return cls("custom", weights=weights)

    def _check_dof(self, n_dof):
        if self.target_index is not None and self.target_index >= n_dof:
            raise IndexError(f"target_index {self.target_index} >= N = {n_dof}")
        if self.weights is not None and self.weights.shape[1] != n_dof:
            raise DimensionMismatch("custom weights do not match N")

    def depends_on(self, level, n_steps):
        if self.kind == "point-final":
            return level == n_steps
        return True

    def term(self, state, level, n_steps, dt):
        state = np.asarray(state, dtype=float)
        self._check_dof(state.shape[0])
        if self.kind == "point-final":
            return state[self.target_index] if level == n_steps else np.zeros(state.shape[1:])
        if self.kind == "time-integral":
            return dt * state[self.target_index]
        return self.weights[level] @ state

    def partial(self, level, n_dof, n_steps, dt):
        self._check_dof(n_dof)
        if self.kind == "custom":
            return self.weights[level].copy()
        g = np.zeros(n_dof)
        if self.kind == "point-final":
            if level == n_steps:
                g[self.target_index] = 1.0
        else:
            g[self.target_index] = dt
        return g
