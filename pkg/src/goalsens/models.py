"""Bundled advection models.

``Advection1D``
    Finite-volume advection ``c_t + u c_x = 0`` on a line of cells with
    forward Euler in time and either first-order upwind fluxes or an NVD
    flux limiter around the mid-point (diamond) face value.
``Advection2D``
    Node-based donor-cell advection on a structured grid with velocity
    ``(u, 0)``. It stands in for an unstructured finite-element solver and
    treats every grid row independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .model_api import ForwardModel, FunctionalSpec, MeshAdjacency, default_target_index


@dataclass(frozen=True)
class Advection1DConfig:
    n_cells: int = 101
    dx: float = 1.0
    dt: float = 0.1
    n_steps: int = 600
    velocity: float = 1.0
    scheme: str = "upwind"
    inflow_value: float = 0.0
    initial_value: float = 0.0

    @property
    def courant(self) -> float:
        return self.velocity * self.dt / self.dx

    @property
    def domain_length(self) -> float:
        return (self.n_cells - 1) * self.dx

    def validate(self):
        if self.n_cells < 2:
            raise ConfigError("need at least two cells")
        if self.scheme not in ("upwind", "nvd"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not (self.dt > 0 and self.dx > 0 and self.velocity > 0):
            raise ConfigError("dt, dx and velocity must be positive")
        if self.n_steps < 0:
            raise ConfigError("n_steps must be >= 0")
        nu = self.courant
        if not 0.0 < nu <= 1.0 + 1e-12:
            raise ConfigError(f"Courant number {nu} outside (0, 1]")

    def refined(self, n_cells: int) -> "Advection1DConfig":
        """Same domain, end time and Courant number on ``n_cells`` cells."""
        t_final = self.n_steps * self.dt
        dx = self.domain_length / (n_cells - 1)
        dt = self.courant * dx / self.velocity
        n_steps = int(round(t_final / dt))
        return replace(self, n_cells=n_cells, dx=dx, dt=dt, n_steps=n_steps)


class Advection1D(ForwardModel):
    """1-D advection with inflow at the left boundary and outflow at the right.

    Cell ``i`` (0-based) sits at ``x = i * dx``.
    """

    scaling_rule = "norm-1d"

    def __init__(self, config: Advection1DConfig | None = None, **kwargs):
        config = config or Advection1DConfig()
        if kwargs:
            config = replace(config, **kwargs)
        config.validate()
        self.config = config
        self.n_dof = config.n_cells
        self.n_steps = config.n_steps
        self.dt = config.dt
        self.nu = config.courant
        self.linear = config.scheme == "upwind"
        self.adjacency = MeshAdjacency.line(config.n_cells)

    def initial_condition(self):
        return np.full(self.n_dof, float(self.config.initial_value))

    def coordinates(self):
        return (np.arange(self.n_dof) * self.config.dx)[:, None]

    def default_functional(self) -> FunctionalSpec:
        """Concentration at cell ``floor(0.85 N)`` at the final time."""
        return FunctionalSpec.point_final(default_target_index(self.n_dof))

    def _step(self, c, level):
        if self.config.scheme == "upwind":
            return upwind_step(c, self.nu, self.config.inflow_value)
        return nvd_step(c, self.nu, self.config.inflow_value)


def upwind_step(c, nu, inflow=0.0):
    """``c_i <- c_i - nu (c_i - c_{i-1})`` with ``c_{-1} = inflow``. Works along axis 0."""
    c = np.asarray(c, dtype=float)
    new = np.empty_like(c)
    new[0] = c[0] - nu * (c[0] - inflow)
    new[1:] = c[1:] - nu * (c[1:] - c[:-1])
    return new


def nvd_face_values(c, nu, inflow=0.0):
    """Face values ``c_{i+1/2}`` for ``i = -1 .. N-1`` (length ``N + 1`` along axis 0).

    Interior faces use the mid-point value where the normalised variable
    ``(c_C - c_U) / (c_D - c_U)`` is in ``[0, 1]``, clipped to the explicit
    TVD region ``[c_hat, min(1, c_hat / nu)]``; otherwise, and when
    ``c_D == c_U``, the upwind value. The inflow face carries ``inflow`` and
    the outflow face the last cell value.
    """
    c = np.asarray(c, dtype=float)
    faces = np.empty((c.shape[0] + 1,) + c.shape[1:])
    faces[0] = inflow
    faces[-1] = c[-1]
    up = np.empty_like(c[:-1])
    up[0] = inflow
    up[1:] = c[:-2]
    cen = c[:-1]
    down = c[1:]
    denom = down - up
    with np.errstate(divide="ignore", invalid="ignore"):
        chat = (cen - up) / denom
        monotone = (denom != 0.0) & (chat >= 0.0) & (chat <= 1.0)
        fhat = np.clip(0.5 * (1.0 + chat), chat, np.minimum(1.0, chat / nu))
        limited = up + fhat * denom
    faces[1:-1] = np.where(monotone, limited, cen)
    return faces


def nvd_step(c, nu, inflow=0.0):
    """Conservative update with NVD-limited face values."""
    c = np.asarray(c, dtype=float)
    f = nvd_face_values(c, nu, inflow)
    return c - nu * (f[1:] - f[:-1])


def total_variation(c) -> float:
    return float(np.sum(np.abs(np.diff(np.asarray(c, dtype=float), axis=0))))


@dataclass(frozen=True)
class Advection2DConfig:
    nx: int = 11
    ny: int = 11
    length_x: float = 5.0
    length_y: float = 5.0
    dt: float = 0.125
    t_final: float = 3.5
    velocity: tuple = (1.0, 0.0)
    initial_value: float = 0.5
    inflow_value: float = 0.5
    #: Dirichlet value on the bottom and top rows; ``None`` leaves them free
    wall_value: float | None = 0.0

    @property
    def hx(self) -> float:
        return self.length_x / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.length_y / (self.ny - 1)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def validate(self):
        if self.nx < 2 or self.ny < 1:
            raise ConfigError("grid too small")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ConfigError("t_final must be an integer number of time steps")
        ux, uy = self.velocity
        if uy != 0.0 or not ux > 0:
            raise ConfigError("only velocities (u, 0) with u > 0 are supported")
        nu = ux * self.dt / self.hx
        if nu > 1.0 + 1e-12:
            raise ConfigError(f"Courant number {nu} exceeds 1")


class Advection2D(ForwardModel):
    """Row-wise upwind transport in +x on an ``nx`` by ``ny`` node grid.

    Node ``(i, j)`` has index ``j * nx + i`` and sits at ``(i * hx, j * hy)``.
    Column ``i = 0`` holds the inflow value; with ``wall_value`` set the
    bottom and top rows are held at it too.
    """

    scaling_rule = "range-2d3d"
    linear = True

    def __init__(self, config: Advection2DConfig | None = None, **kwargs):
        config = config or Advection2DConfig()
        if kwargs:
            config = replace(config, **kwargs)
        config.validate()
        self.config = config
        self.n_dof = config.nx * config.ny
        self.n_steps = config.n_steps
        self.dt = config.dt
        self.nu = config.velocity[0] * config.dt / config.hx
        self.adjacency = MeshAdjacency.grid(config.nx, config.ny)

    def initial_condition(self):
        return np.full(self.n_dof, float(self.config.initial_value))

    def coordinates(self):
        cfg = self.config
        jj, ii = np.meshgrid(np.arange(cfg.ny), np.arange(cfg.nx), indexing="ij")
        return np.column_stack([ii.ravel() * cfg.hx, jj.ravel() * cfg.hy])

    def nearest_node(self, x: float, y: float) -> int:
        cfg = self.config
        i = min(max(int(math.floor(x / cfg.hx + 0.5)), 0), cfg.nx - 1)
        j = min(max(int(math.floor(y / cfg.hy + 0.5)), 0), cfg.ny - 1)
        return j * cfg.nx + i

    def default_functional(self) -> FunctionalSpec:
        """Concentration at the node nearest ``(4, 1.5)`` at the final time."""
        return FunctionalSpec.point_final(self.nearest_node(4.0, 1.5))

    def _step(self, c, level):
        cfg = self.config
        grid = c.reshape((cfg.ny, cfg.nx) + c.shape[1:])
        new = np.empty_like(grid)
        new[:, 1:] = grid[:, 1:] - self.nu * (grid[:, 1:] - grid[:, :-1])
        new[:, 0] = cfg.inflow_value
        if cfg.wall_value is not None:
            new[0] = cfg.wall_value
            new[-1] = cfg.wall_value
        return new.reshape(c.shape)
