"""Experiment configs: validated loading and dispatch to the engine."""
from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .engine import EngineConfig, make_windows, run_single_window_goalbased, run_time_windows
from .engine import run_with_reorthogonalisation
from .errors import ConfigError
from .linalg import RegularizationPolicy
from .model_api import FunctionalSpec
from .models import Advection1D, Advection1DConfig, Advection2D, Advection2DConfig
from .oracle import OracleConfig
from .perturbation import PerturbationConfig

WINDOW_MODES = {"windows-sequential": "sequential-backward", "windows-explicit": "explicit"}


def schema() -> dict:
    text = resources.files("goalsens").joinpath("data/experiment.schema.json").read_text()
    return json.loads(text)


def validate(config: dict) -> dict:
    """Check ``config`` against the schema; returns it unchanged."""
    try:
        jsonschema.validate(config, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    return config


def load(path) -> dict:
    """Read a YAML or JSON config file and validate it."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} does not hold a mapping")
    return validate(data)


def with_seed(config: dict, seed: int | None) -> dict:
    config = copy.deepcopy(config)
    if seed is not None:
        config.setdefault("method", {})["seed"] = int(seed)
    return config


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form of ``config``."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def build_model(config: dict):
    block = dict(config["model"])
    kind = block.pop("kind")
    if kind == "1d":
        refine = block.pop("refine_to", None)
        cfg = Advection1DConfig(**block)
        if refine is not None:
            cfg = cfg.refined(refine)
        return Advection1D(cfg)
    if "velocity" in block:
        block["velocity"] = tuple(block["velocity"])
    return Advection2D(Advection2DConfig(**block))


def build_functional(model, config: dict):
    block = config.get("functional", {})
    kind = block.get("kind", "point-final")
    if "target_index" in block and "target_point" in block:
        raise ConfigError("give target_index or target_point, not both")
    if "target_index" in block:
        index = block["target_index"]
    elif "target_point" in block:
        point = block["target_point"]
        if isinstance(model, Advection2D):
            if len(point) != 2:
                raise ConfigError("a 2d target_point needs two coordinates")
            index = model.nearest_node(*point)
        else:
            index = int(round(point[0] / model.config.dx))
    else:
        index = model.default_functional().target_index
    if not 0 <= index < model.n_dof:
        raise ConfigError(f"target index {index} outside [0, {model.n_dof})")
    if kind == "time-integral":
        return FunctionalSpec.time_integral(index)
    return FunctionalSpec.point_final(index)


def output_levels(config: dict, n_steps: int) -> list[int] | None:
    out = config.get("output", {})
    if "levels" in out:
        bad = [n for n in out["levels"] if n > n_steps]
        if bad:
            raise ConfigError(f"output levels {bad} beyond the final level {n_steps}")
        return sorted(set(out["levels"]))
    if "stride" in out:
        levels = list(range(0, n_steps + 1, out["stride"]))
        if levels[-1] != n_steps:
            levels.append(n_steps)
        return levels
    return None


def engine_config(config: dict, n_steps: int, threads: int = 1) -> EngineConfig:
    m = config["method"]
    pert = PerturbationConfig(
        epsilon=m.get("epsilon", 1e-4),
        smoothing_steps=m.get("smoothing_steps", "auto"),
        weighting_enabled=m.get("weighting", True),
        orthogonalise_enabled=m.get("orthogonalise", True),
        rng_seed=m.get("seed", 0),
    )
    regularization = None
    if "regularization" in m or m.get("alpha_s") is not None:
        enabled = m.get("regularization", True)
        alpha = m.get("alpha_s")
        regularization = (RegularizationPolicy(alpha_s=alpha if alpha is not None else 1e-14)
                          if enabled else RegularizationPolicy.off())
    return EngineConfig(
        ensemble_size=m["ensemble_size"],
        perturbation=pert,
        regularization=regularization,
        output_levels=output_levels(config, n_steps),
        n_output_levels=config.get("output", {}).get("n_levels", 10),
        every_n=m.get("every_N", 1),
        sigma=m.get("sigma"),
        threads=threads,
        explicit_passes=m.get("explicit_passes", 1),
    )


def oracle_config(model, config: dict, threads: int = 1) -> OracleConfig:
    block = config.get("oracle", {})
    return OracleConfig.for_model(model, threads=threads, **block)


def run_method(model, functional, config: dict, threads: int = 1):
    """Maps at the output levels for the method block of ``config``."""
    m = config["method"]
    cfg = engine_config(config, model.n_steps, threads)
    mode = m["mode"]
    if mode == "plain":
        return run_single_window_goalbased(model, functional, cfg)
    if mode == "reorth":
        return run_with_reorthogonalisation(model, functional, cfg, every_N=cfg.every_n)
    w = m.get("windows", {})
    if model.n_steps == 0:
        raise ConfigError("time windows need at least one step")
    windows = make_windows(model.n_steps, steps_per_window=w.get("steps_per_window"),
                           count=w.get("count"))
    return run_time_windows(model, functional, windows, WINDOW_MODES[mode], cfg)
