"""Configuration handling, dispatch, manifest, and determinism."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from skewlab.cli import RunConfig, describe, main, run
from skewlab.errors import ConfigInvalid
from skewlab.reporting import sha256_file

REPO = Path(__file__).resolve().parents[1]
BUNDLED = REPO / "configs" / "kan_default.json"


def small_config(tmp_path, **overrides):
    data = json.loads(BUNDLED.read_text())
    data["grid"] = {
        "base_subdivisions": [4, 4], "fiber_subdivisions": 2,
        "iterations": 3000, "samples_per_cell": 6,
    }
    data["caps"]["density_period_cap"] = 5
    data["out_dir"] = str(tmp_path / "out")
    data.update(overrides)
    return RunConfig.from_dict(data)


def test_bundled_config_smoke(tmp_path):
    cfg = small_config(tmp_path)
    out = run(cfg)
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["experiments"]) == {
        "exponents", "interconnect", "transitivity", "basins", "density"
    }
    for name in manifest["experiments"]:
        assert (out / f"{name}.json").exists()
    # manifest completeness: every written file is listed with its checksum
    for p in out.iterdir():
        if p.name == "manifest.json":
            continue
        assert p.name in manifest["files"]
        assert manifest["files"][p.name] == sha256_file(p)


def test_determinism_across_runs(tmp_path):
    cfg1 = small_config(tmp_path / "a")
    cfg2 = small_config(tmp_path / "b")
    out1, out2 = run(cfg1), run(cfg2)
    m1 = json.loads((out1 / "manifest.json").read_text())
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m1["files"] == m2["files"]


def test_config_roundtrip_lossless(tmp_path):
    cfg = small_config(tmp_path)
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


def test_invalid_epsilon_exits_nonzero(tmp_path):
    path = tmp_path / "bad.json"
    data = json.loads(BUNDLED.read_text())
    data["family"]["epsilon"] = 0.7
    path.write_text(json.dumps(data))
    code = main(["--config", str(path), "--out", str(tmp_path / "o"), "validate"])
    assert code == 2


def test_invalid_matrix_rejected(tmp_path):
    with pytest.raises(ConfigInvalid):
        cfg = small_config(tmp_path, matrix=[[1, 0], [0, 1]])
        cfg.build_system()


def test_unknown_field_rejected(tmp_path):
    with pytest.raises(ConfigInvalid):
        RunConfig.from_dict({"oops": 1})


def test_empty_experiment_list(tmp_path):
    cfg = small_config(tmp_path, experiments=[])
    out = run(cfg)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiments"] == []
    assert (out / "manifest.json").exists()


def test_describe_contents(tmp_path):
    cfg = small_config(tmp_path)
    text = describe(cfg)
    assert "unstable rate" in text
    assert "domination margins" in text
    assert "0.962423650119" in text
    assert "negative" in text  # quadrature verdicts


def test_cli_single_experiment(tmp_path):
    out_dir = tmp_path / "single"
    code = main([
        "--config", str(BUNDLED), "--out", str(out_dir), "--seed", "3",
        "exponents",
    ])
    assert code == 0
    assert (out_dir / "exponents.json").exists()
    payload = json.loads((out_dir / "exponents.json").read_text())
    assert payload["seed"] == 3


def test_threaded_run_matches_serial(tmp_path):
    cfg1 = small_config(tmp_path / "serial")
    out1 = run(cfg1, experiments=["exponents", "density"], threads=1)
    cfg2 = small_config(tmp_path / "threaded")
    out2 = run(cfg2, experiments=["exponents", "density"], threads=2)
    for name in ("exponents.json", "density.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
