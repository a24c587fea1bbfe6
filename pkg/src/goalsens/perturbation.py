"""Generation of ensemble perturbations.

Each member's perturbation goes through the same pipeline:

1. a uniform random field on ``[-1/2, 1/2]``,
2. ``steps`` applications of the neighbour-averaging operator ``S``,
3. Hadamard weighting by ``|g| / max|g|`` for the current sensitivity map,
4. Gram-Schmidt against earlier members, then scaling by ``epsilon / L``.

Random draws come from numpy's counter-based Philox generator keyed by
``(seed, window, member, attempt)``, so a draw does not depend on how many
numbers were consumed before it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import ConfigError, DegenerateVector, DimensionMismatch, RetriesExhausted, ZeroGoalMap
from .model_api import MeshAdjacency

SCALING_RULES = ("norm-1d", "range-2d3d")


@dataclass(frozen=True)
class PerturbationConfig:
    epsilon: float = 1e-4
    smoothing_steps: Union[int, str] = "auto"
    weighting_enabled: bool = True
    orthogonalise_enabled: bool = True
    #: ``None`` defers to the forward model's rule
    scaling_rule: str | None = None
    rng_seed: int = 0
    max_retries: int = 5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if self.smoothing_steps != "auto" and (
            not isinstance(self.smoothing_steps, (int, np.integer)) or self.smoothing_steps < 0
        ):
            raise ConfigError("smoothing_steps must be 'auto' or an integer >= 0")
        if self.scaling_rule is not None and self.scaling_rule not in SCALING_RULES:
            raise ConfigError(f"unknown scaling rule {self.scaling_rule!r}")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must fit in 64 unsigned bits")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")


def auto_smoothing_steps(extent: int) -> int:
    """Nearest integer to a quarter of the cells across the domain (halves round up)."""
    return int(math.floor(extent / 4.0 + 0.5))


def member_rng(seed: int, window: int, member: int, attempt: int = 0) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed), int(window), int(member), int(attempt)])
    return np.random.Generator(np.random.Philox(key))


def random_field(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. samples, uniform on ``[-1/2, 1/2)``."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    return rng.random(n) - 0.5


class SmoothingOperator:
    """``S_ii = 1/2`` and ``S_ij = 1 / (2 v_i)`` for each neighbour ``j`` of ``i``."""

    def __init__(self, adjacency: MeshAdjacency):
        self.adjacency = adjacency
        n = len(adjacency)
        val = adjacency.valency
        rows, cols, vals = [], [], []
        for i, nb in enumerate(adjacency.neighbors):
            if nb.size == 0:
                rows.append(i), cols.append(i), vals.append(1.0)
                continue
            rows.append(i), cols.append(i), vals.append(0.5)
            rows.extend([i] * nb.size)
            cols.extend(nb.tolist())
            vals.extend([0.5 / val[i]] * nb.size)
        self.matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def __len__(self):
        return self.matrix.shape[0]

    def apply(self, v, steps: int = 1) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.matrix.shape[0]:
            raise DimensionMismatch(f"field has length {v.shape[0]}, mesh has {self.matrix.shape[0]}")
        for _ in range(int(steps)):
            v = self.matrix @ v
        return v

    def auto_steps(self) -> int:
        return auto_smoothing_steps(self.adjacency.extent)


def smooth(v, op: SmoothingOperator, steps: int) -> np.ndarray:
    """Apply ``op`` ``steps`` times."""
    return op.apply(v, steps)


def _values(g):
    return np.asarray(getattr(g, "values", g), dtype=float)


def weight_by_goal(v, g) -> np.ndarray:
    """``|g| * v / max|g|`` element-wise.

    Raises
    ------
    ZeroGoalMap
        If ``g`` is identically zero.
    """
    v = np.asarray(v, dtype=float)
    g = _values(g)
    if g.shape != v.shape:
        raise DimensionMismatch(f"map has shape {g.shape}, field has {v.shape}")
    gmax = float(np.max(np.abs(g)))
    if gmax == 0.0:
        raise ZeroGoalMap("sensitivity map is identically zero")
    return np.abs(g) * v / gmax


def scale_length(v, rule: str) -> float:
    if rule == "norm-1d":
        return float(np.sqrt(v @ v))
    if rule == "range-2d3d":
        return float(np.max(v) - np.min(v))
    raise ConfigError(f"unknown scaling rule {rule!r}")


def orthogonalise_and_rescale(v, previous: Sequence[np.ndarray], cfg: PerturbationConfig,
                              scaling_rule: str | None = None) -> np.ndarray:
    """Gram-Schmidt ``v`` against ``previous`` (if enabled), then scale by ``epsilon / L``.

    ``L`` is the Euclidean norm (``"norm-1d"``) or the range max - min
    (``"range-2d3d"``) of the orthogonalised vector.
    """
    rule = scaling_rule or cfg.scaling_rule or "norm-1d"
    v = np.asarray(v, dtype=float)
    if cfg.orthogonalise_enabled and len(previous):
        v = linalg.gram_schmidt_against(v, previous)
    L = scale_length(v, rule)
    if L == 0.0 or not np.isfinite(L):
        raise DegenerateVector("perturbation has zero scale length")
    return v * (cfg.epsilon / L)


class PerturbationGenerator:
    """Stateful pipeline producing the perturbations of one ensemble (one window).

    Parameters
    ----------
    adjacency : MeshAdjacency
    cfg : PerturbationConfig
    scaling_rule : str
        Rule used when ``cfg.scaling_rule`` is ``None``.
    window : int
        Part of the random key, so each time window draws its own fields.
    """

    def __init__(self, adjacency: MeshAdjacency, cfg: PerturbationConfig,
                 scaling_rule: str = "norm-1d", window: int = 0):
        self.cfg = cfg
        self.smoother = SmoothingOperator(adjacency)
        self.steps = self.smoother.auto_steps() if cfg.smoothing_steps == "auto" else int(cfg.smoothing_steps)
        self.rule = cfg.scaling_rule or scaling_rule
        self.window = window
        self.previous: list[np.ndarray] = []

    def __len__(self):
        return len(self.previous)

    def draw(self, member: int, g_current=None, attempt: int = 0) -> np.ndarray:
        """One pass of the pipeline without retries or bookkeeping."""
        rng = member_rng(self.cfg.rng_seed, self.window, member, attempt)
        v = random_field(len(self.smoother), rng)
        v = self.smoother.apply(v, self.steps)
        if self.cfg.weighting_enabled and g_current is not None:
            try:
                v = weight_by_goal(v, g_current)
            except ZeroGoalMap:
                pass
        return orthogonalise_and_rescale(v, self.previous, self.cfg, self.rule)

    def next(self, g_current=None) -> np.ndarray:
        """Draw the next member's perturbation and keep it for later orthogonalisation."""
        member = len(self.previous)
        last = None
        for attempt in range(self.cfg.max_retries + 1):
            try:
                dm = self.draw(member, g_current, attempt)
            except DegenerateVector as exc:
                last = exc
                continue
            self.previous.append(dm)
            return dm
        raise RetriesExhausted(
            f"member {member}: {self.cfg.max_retries + 1} draws were all degenerate"
        ) from last

    def matrix(self) -> np.ndarray:
        """Perturbations so far as columns, shape ``(N, e)``."""
        return np.column_stack(self.previous) if self.previous else np.empty((len(self.smoother), 0))


def generate_member_perturbation(e: int, g_current, previous: Sequence[np.ndarray],
                                 mesh: MeshAdjacency, cfg: PerturbationConfig,
                                 scaling_rule: str = "norm-1d", window: int = 0) -> np.ndarray:
    """Perturbation for member ``e`` (0-based) given the earlier members ``previous``."""
    gen = PerturbationGenerator(mesh, cfg, scaling_rule, window)
    gen.previous = [np.asarray(p, dtype=float) for p in previous]
    if len(gen.previous) != e:
        raise ConfigError(f"member index {e} does not match {len(previous)} previous members")
    return gen.next(g_current)
