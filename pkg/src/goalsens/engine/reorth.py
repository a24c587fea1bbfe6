"""Re-orthogonalisation of ensemble members through time.

Every ``every_n`` steps the member deviations ``M`` are replaced by
``Mt = sigma * Q`` where ``Q`` is their Gram-Schmidt orthonormalisation,
and members restart from ``Psibar + Mt``. With ``M V = Mt`` and
``Mt^T Mt = sigma^2 I`` the coordinate change is ``V = sigma^2 (Mt^T M)^-1``,
so derivatives move back across a restart with
``V^-T = sigma^-2 (Mt^T M)^T``. For ``sigma = 1`` this is the usual
orthonormal restart.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import linalg
from ..errors import ConfigError
from ..model_api import ForwardModel, Functional
from ..perturbation import PerturbationGenerator
from .core import (EngineConfig, SensitivityMap, assemble_sensitivity_map, run_baseline,
                   solve_ensembles)


@dataclass
class ReorthTransform:
    """``V^-T`` recorded at a restart level, shape ``(E, E)``."""

    time_level: int
    V_inv_T: np.ndarray


def reorthogonalise(D: np.ndarray, sigma: float):
    """Orthogonalised restart deviations and the transform for pre-restart deviations ``D``.

    Returns ``(Mt, V_inv_T)`` with ``Mt = sigma * GS(D)`` and
    ``V_inv_T = sigma^-2 * D^T Mt``.
    """
    Mt = sigma * linalg.orthonormalize_columns(D)
    return Mt, (D.T @ Mt) / sigma**2


def run_with_reorthogonalisation(model: ForwardModel, functional: Functional, cfg: EngineConfig,
                                 every_N: int | None = None, return_transforms: bool = False):
    """Maps at the output levels with members re-orthogonalised every ``every_N`` steps.

    The initial perturbations come from :func:`solve_ensembles` over the
    whole horizon (plain forward runs feed the goal-based weighting). The
    members are then re-run together with restarts at levels
    ``every_N, 2 every_N, ... < Nt``. Backwards from ``Nt`` the derivative
    with respect to the ensemble coordinates is accumulated and mapped
    across each restart by ``V^-T``; maps at restart levels pair it with the
    pre-restart deviations.
    """
    every_N = cfg.every_n if every_N is None else every_N
    if every_N < 1:
        raise ConfigError("every_N must be >= 1")
    policy = cfg.policy(default_on=False)
    baseline = run_baseline(model, functional)
    levels = set(cfg.levels(model.n_steps))
    Nt = model.n_steps
    base = baseline.states

    if cfg.perturbation.weighting_enabled and not cfg.batch:
        P = solve_ensembles(model, functional, baseline, np.ones(model.n_dof), cfg,
                            record=(0,), policy=policy).perturbations
    else:
        gen = PerturbationGenerator(model.adjacency, cfg.perturbation, model.scaling_rule)
        for _ in range(cfg.ensemble_size):
            gen.next(None)
        P = gen.matrix()
    sigma = cfg.sigma or float(np.mean(np.linalg.norm(P, axis=0)))
    E = P.shape[1]

    restart = {n for n in range(every_N, Nt, every_N)}
    devs, transforms = {}, {}
    diffs = np.zeros((Nt + 1, E))
    X = base[0][:, None] + P
    for n in range(Nt + 1):
        if n > 0:
            X = model.step(X, n - 1)
        if n in restart:
            D = X - base[n][:, None]
            Mt, VT = reorthogonalise(D, sigma)
            transforms[n] = VT
            if n in levels:
                devs[n] = D
            X = base[n][:, None] + Mt
        elif n in levels:
            devs[n] = X - base[n][:, None]
        if functional.depends_on(n, Nt):
            diffs[n] = (functional.term(X, n, Nt, baseline.dt)
                        - functional.term(base[n], n, Nt, baseline.dt))

    maps = {}
    G = np.zeros(E)
    for n in range(Nt, -1, -1):
        G = G + diffs[n]
        if n in restart:
            G = transforms[n] @ G
        if n in levels:
            maps[n] = assemble_sensitivity_map(devs[n], G, policy, n, model.time(n))
    out = [maps[n] for n in sorted(levels)]
    if return_transforms:
        return out, [ReorthTransform(n, transforms[n]) for n in sorted(transforms)]
    return out
