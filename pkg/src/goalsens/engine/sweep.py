"""Error and peak magnitude of the level-0 map against ensemble size."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericalError
from .core import EngineConfig, run_single_window_goalbased
from .reorth import run_with_reorthogonalisation

VARIANTS = ("goal", "non-goal", "goal+reorth", "non-goal+reorth")


@dataclass(frozen=True)
class SweepRow:
    ensemble_size: int
    variant: str
    seed: int
    status: str
    max_abs_g0: float = float("nan")
    l2_rel_error_t0: float = float("nan")
    mean_l2_rel_error: float = float("nan")

    def as_dict(self):
        return dataclasses.asdict(self)


def _variant_config(cfg: EngineConfig, variant: str, E: int, seed: int) -> EngineConfig:
    pert = dataclasses.replace(cfg.perturbation, weighting_enabled=variant.startswith("goal"),
                               rng_seed=seed)
    return dataclasses.replace(cfg, ensemble_size=E, perturbation=pert)


def convergence_sweep(model, functional, ensemble_sizes, variants=VARIANTS, seeds=(0,),
                      base_config: EngineConfig | None = None, reference: dict | None = None,
                      ) -> list[SweepRow]:
    """One row per ``(E, variant, seed)``.

    ``reference`` maps level to oracle map; when omitted the oracle is run
    once at the output levels. Numerical failures (a singular system, an
    ensemble that cannot be made independent) are recorded in ``status``
    rather than raised.
    """
    from ..oracle import compare_maps, oracle_maps

    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown sweep variant {v!r}; expected one of {VARIANTS}")
    ensemble_sizes = list(ensemble_sizes)
    if not ensemble_sizes:
        return []
    base = base_config or EngineConfig()
    levels = base.levels(model.n_steps)
    if reference is None:
        reference = oracle_maps(model, functional, levels)

    rows = []
    for E in ensemble_sizes:
        for variant in variants:
            for seed in seeds:
                cfg = _variant_config(base, variant, E, seed)
                try:
                    if variant.endswith("+reorth"):
                        maps = run_with_reorthogonalisation(model, functional, cfg)
                    else:
                        maps = run_single_window_goalbased(model, functional, cfg)
                except NumericalError as exc:
                    rows.append(SweepRow(E, variant, seed, type(exc).__name__))
                    continue
                errs = [compare_maps(reference[m.level], m).l2_rel_error for m in maps]
                g0 = maps[0]
                rows.append(SweepRow(E, variant, seed, "ok",
                                     float(np.max(np.abs(g0.values))),
                                     float(errs[0]), float(np.mean(errs))))
    return rows
