"""Plain-text map files, sweep tables and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .engine import SensitivityMap
from .errors import ConfigError

MAP_MAGIC = "# goalsens sensitivity map"


def map_filename(level: int) -> str:
    return f"map_level_{level:06d}.txt"


def write_map(path, smap: SensitivityMap, coordinates, config_hash: str = "") -> Path:
    """Write one map as ``index coord... value`` rows below ``# key: value`` headers.

    Values are written with ``repr`` so they parse back bit for bit.
    """
    path = Path(path)
    coords = np.asarray(coordinates, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] != len(smap.values):
        raise ConfigError(f"{coords.shape[0]} coordinates for {len(smap.values)} values")
    names = ["x", "y", "z"][:coords.shape[1]]
    lines = [
        MAP_MAGIC,
        f"# level: {smap.level}",
        f"# time: {float(smap.time)!r}",
        f"# config_hash: {config_hash}",
        "# columns: index " + " ".join(names) + " value",
    ]
    for i, (xyz, v) in enumerate(zip(coords, smap.values)):
        lines.append(" ".join([str(i), *(repr(float(c)) for c in xyz), repr(float(v))]))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_map(path) -> tuple[SensitivityMap, np.ndarray, dict]:
    """Parse a file written by :func:`write_map`.

    Returns
    -------
    smap : SensitivityMap
    coordinates : ndarray, shape (N, d)
    header : dict
    """
    path = Path(path)
    header, rows = {}, []
    with path.open() as fh:
        first = fh.readline().rstrip("\n")
        if first != MAP_MAGIC:
            raise ConfigError(f"{path} is not a sensitivity map file")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                header[key.strip()] = value.strip()
            else:
                rows.append([float(tok) for tok in line.split()])
    data = np.array(rows, dtype=float).reshape(len(rows), -1)
    if data.size and not np.array_equal(data[:, 0], np.arange(len(rows))):
        raise ConfigError(f"{path}: rows are not in index order")
    level = int(header["level"])
    time = float(header["time"])
    return SensitivityMap(level, data[:, -1].copy(), time), data[:, 1:-1].copy(), header


def write_sweep(path, rows) -> Path:
    path = Path(path)
    dicts = [r.as_dict() for r in rows]
    fields = list(dicts[0]) if dicts else ["ensemble_size", "variant", "seed", "status",
                                           "max_abs_g0", "l2_rel_error_t0", "mean_l2_rel_error"]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for d in dicts:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in d.items()})
    return path


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(directory, config: dict, config_hash: str, files, extra=None) -> Path:
    """Record the config, its hash, the seed and the sha256 of every artifact."""
    from . import __version__

    directory = Path(directory)
    manifest = {
        "goalsens_version": __version__,
        "config": config,
        "config_hash": config_hash,
        "seed": config.get("method", {}).get("seed", 0),
        "files": {Path(f).name: file_sha256(f) for f in files},
    }
    if extra:
        manifest.update(extra)
    return write_json(directory / "manifest.json", manifest)
