"""``goalsens`` command line for running experiments and checking them against the oracle."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiment, io, presets
from .engine.sweep import VARIANTS, convergence_sweep
from .errors import ConfigError, GoalsensError, NumericalError
from .oracle import compare_maps, oracle_maps

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _parser():
    p = argparse.ArgumentParser(prog="goalsens", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "compute maps and write them to disk"),
                       ("verify", "compare maps with the brute-force oracle"),
                       ("sweep", "tabulate error against ensemble size")):
        s = sub.add_parser(name, help=text)
        src = s.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="YAML or JSON experiment file")
        src.add_argument("--preset", choices=sorted(presets.PRESETS))
        s.add_argument("--out", type=Path, help="output directory (overrides the config)")
        s.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        s.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
        if name == "verify":
            s.add_argument("--tolerance", type=float, default=1e-6,
                           help="relative L2 error counted as a pass (default 1e-6)")
    return p


def _load(args) -> dict:
    config = presets.get(args.preset) if args.preset else experiment.load(args.config)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return experiment.validate(experiment.with_seed(config, args.seed))


def _out_dir(args, config) -> Path:
    out = args.out or Path(config.get("output", {}).get("directory", "goalsens-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _metrics(reference, maps, tolerance=None):
    rows = []
    for m in maps:
        c = compare_maps(reference[m.level], m)
        row = {"level": m.level, "time": m.time, "l2_rel_error": c.l2_rel_error,
               "cosine_similarity": c.cosine_similarity, "peak_offset_cells": c.peak_offset_cells,
               "degenerate": bool(c.degenerate)}
        if tolerance is not None:
            row["pass"] = bool(c.l2_rel_error < tolerance)
        rows.append(row)
    errs = [r["l2_rel_error"] for r in rows]
    return {"levels": rows, "mean_l2_rel_error": sum(errs) / len(errs) if errs else None,
            "max_l2_rel_error": max(errs) if errs else None}


def _oracle(model, functional, config, levels, threads):
    return oracle_maps(model, functional, levels,
                       experiment.oracle_config(model, config, threads))


def cmd_run(args, config):
    out = _out_dir(args, config)
    model = experiment.build_model(config)
    functional = experiment.build_functional(model, config)
    maps = experiment.run_method(model, functional, config, args.threads)
    digest = experiment.config_hash(config)
    coords = model.coordinates()
    files = [io.write_map(out / io.map_filename(m.level), m, coords, digest) for m in maps]
    if config.get("output", {}).get("metrics", False):
        ref = _oracle(model, functional, config, [m.level for m in maps], args.threads)
        files.append(io.write_json(out / "metrics.json", _metrics(ref, maps)))
    io.write_manifest(out, config, digest, files, {"command": "run"})
    print(f"wrote {len(maps)} maps to {out}")


def cmd_verify(args, config):
    model = experiment.build_model(config)
    functional = experiment.build_functional(model, config)
    maps = experiment.run_method(model, functional, config, args.threads)
    ref = _oracle(model, functional, config, [m.level for m in maps], args.threads)
    report = _metrics(ref, maps, args.tolerance)
    for r in report["levels"]:
        print(f"level {r['level']:6d}  t={r['time']:<10.6g} l2={r['l2_rel_error']:.3e}  "
              f"cos={r['cosine_similarity']:+.6f}  peak_offset={r['peak_offset_cells']}  "
              f"{'PASS' if r['pass'] else 'FAIL'}")
    if args.out or "directory" in config.get("output", {}):
        out = _out_dir(args, config)
        f = io.write_json(out / "verify.json", report)
        io.write_manifest(out, config, experiment.config_hash(config), [f], {"command": "verify"})


def cmd_sweep(args, config):
    block = config.get("sweep")
    if block is None:
        raise ConfigError("the sweep command needs a 'sweep' block in the config")
    out = _out_dir(args, config)
    model = experiment.build_model(config)
    functional = experiment.build_functional(model, config)
    base = experiment.engine_config(config, model.n_steps, args.threads)
    seeds = block.get("seeds", [config["method"].get("seed", 0)])
    rows = convergence_sweep(model, functional, block.get("ensemble_sizes", []),
                             block.get("variants", list(VARIANTS)), seeds, base)
    f = io.write_sweep(out / "sweep.csv", rows)
    io.write_manifest(out, config, experiment.config_hash(config), [f], {"command": "sweep"})
    print(f"wrote {len(rows)} rows to {f}")


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}


def _fail(code, exc, args):
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    out = getattr(args, "out", None)
    if out is not None and code != EXIT_IO:
        try:
            out.mkdir(parents=True, exist_ok=True)
            io.write_json(out / "error.json", record)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = _load(args)
        COMMANDS[args.command](args, config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc, args)
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, exc, args)
    except OSError as exc:
        return _fail(EXIT_IO, exc, args)
    except GoalsensError as exc:
        return _fail(EXIT_CONFIG, exc, args)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
