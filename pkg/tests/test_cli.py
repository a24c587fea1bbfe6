import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from goalsens import cli, experiment, io, presets
from goalsens.engine import SensitivityMap

ROOT = Path(__file__).resolve().parents[1]


def write_config(tmp_path, config, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(config))
    return path


def small_config(**method):
    return {"model": {"kind": "1d", "n_cells": 21, "n_steps": 30, "scheme": "upwind"},
            "method": {"mode": "plain", "ensemble_size": 4, **method},
            "output": {"n_levels": 4}}


def test_reorth_full_rank_run_reports_tiny_error(tmp_path):
    assert cli.main(["run", "--preset", "upwind-reorth-101", "--out", str(tmp_path)]) == 0
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["max_l2_rel_error"] < 1e-6
    assert len(list(tmp_path.glob("map_level_*.txt"))) == 10


def test_one_step_windows_write_ten_maps(tmp_path):
    assert cli.main(["run", "--preset", "nvd-windows-5", "--out", str(tmp_path)]) == 0
    files = sorted(p.name for p in tmp_path.glob("map_level_*.txt"))
    assert len(files) == 10 and files[0] == "map_level_000000.txt" and files[-1] == "map_level_000600.txt"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    for name, digest in manifest["files"].items():
        assert io.file_sha256(tmp_path / name) == digest


def test_missing_config_exits_2(tmp_path, capsys):
    code = cli.main(["run", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "ConfigError"
    assert json.loads((tmp_path / "error.json").read_text())["exit_code"] == 2


def test_unknown_key_exits_2(tmp_path):
    cfg = small_config()
    cfg["method"]["ensemble"] = 3
    assert cli.main(["run", "--config", str(write_config(tmp_path, cfg)), "--out", str(tmp_path)]) == 2


def test_numerical_failure_exits_3(tmp_path):
    # heavy smoothing on a path mesh cannot give 101 independent unweighted draws
    cfg = {"model": {"kind": "1d", "n_steps": 1},
           "method": {"mode": "plain", "ensemble_size": 101, "weighting": False}}
    code = cli.main(["run", "--config", str(write_config(tmp_path, cfg)), "--out", str(tmp_path)])
    assert code == cli.EXIT_NUMERICAL
    assert json.loads((tmp_path / "error.json").read_text())["error"] == "RetriesExhausted"


def test_unwritable_output_exits_4(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = write_config(tmp_path, small_config())
    assert cli.main(["run", "--config", str(cfg), "--out", str(blocker / "sub")]) == cli.EXIT_IO


def test_verify_zero_steps_reports_level_zero(tmp_path, capsys):
    cfg = small_config()
    cfg["model"]["n_steps"] = 0
    assert cli.main(["verify", "--config", str(write_config(tmp_path, cfg))]) == 0
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("level")]
    assert len(lines) == 1 and lines[0].split()[1] == "0"


def test_verify_writes_report(tmp_path):
    cfg = write_config(tmp_path, small_config(ensemble_size=21, mode="reorth"))
    assert cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == 0
    report = json.loads((tmp_path / "v" / "verify.json").read_text())
    assert all(r["pass"] for r in report["levels"])


def test_sweep_writes_table(tmp_path):
    cfg = small_config()
    cfg["sweep"] = {"ensemble_sizes": [3, 5], "variants": ["goal", "non-goal"], "seeds": [0]}
    assert cli.main(["sweep", "--config", str(write_config(tmp_path, cfg)), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    assert lines[0].startswith("ensemble_size,variant,seed,status") and len(lines) == 5


def test_sweep_needs_block(tmp_path):
    cfg = write_config(tmp_path, small_config())
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_rerun_from_manifest_is_bitwise_identical(tmp_path):
    cfg = write_config(tmp_path, small_config(seed=17))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    again = write_config(tmp_path, manifest["config"], "again.json")
    assert cli.main(["run", "--config", str(again), "--out", str(tmp_path / "b")]) == 0
    for name in manifest["files"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path, small_config(seed=1))
    assert cli.main(["run", "--config", str(cfg), "--seed", "9", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 9 and manifest["config"]["method"]["seed"] == 9


def test_map_file_round_trip(tmp_path, rng):
    smap = SensitivityMap(7, rng.standard_normal(5) * 1e-300, 0.7000000000000001)
    coords = rng.standard_normal((5, 2))
    path = io.write_map(tmp_path / io.map_filename(7), smap, coords, "abc")
    back, c, header = io.read_map(path)
    assert back.level == 7 and back.time == smap.time and header["config_hash"] == "abc"
    assert np.array_equal(back.values, smap.values) and np.array_equal(c, coords)


def test_bundled_schema_matches_docs_copy():
    assert json.loads((ROOT / "docs" / "config_schema.json").read_text()) == experiment.schema()


@pytest.mark.parametrize("name", sorted(presets.PRESETS))
def test_presets_validate(name):
    experiment.validate(presets.get(name))
