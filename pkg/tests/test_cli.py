import json
import os

import numpy as np
import pytest

from cachebound import artifacts
from cachebound.cli import main
from cachebound.config import load_config, parse_config
from cachebound.errors import ConfigError


def small_config(tmp_path, **overrides):
    doc = {
        "seed": 0,
        "output_dir": str(tmp_path / "out"),
        "trace": {
            "kind": "periodic_phases",
            "params": {"phases": [{"lines": 4}, {"lines": 512}],
                       "phase_length": 600, "cycles": 4},
        },
        "cache": {"line_size": 64, "capacities": [64], "window_instructions": 400},
        "preprocess": {"chunk_length": 16, "train_fraction": 0.8},
        "model": {"d_in": 4, "widths": [4], "h": 8},
        "sweep": {
            "beta_grid": [1e-5, 1e-3, 1e-2, 1e-1],
            "gmin_grid": [0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.95],
            "seeds": [0, 1],
            "budget": 40,
            "batch_size": 8,
            "learning_rate": 0.02,
        },
        "analysis": {"heatmap_window": 8, "max_heatmap_models": 4},
    }
    doc.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_shipped_schema_matches_package_schema():
    from cachebound.config import CONFIG_SCHEMA
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    with open(os.path.join(here, "docs", "config.schema.json")) as fh:
        shipped = json.load(fh)
    assert shipped == CONFIG_SCHEMA


def test_missing_config_file_is_exit_1(tmp_path, capsys):
    code = main(["simulate", "--config", str(tmp_path / "nope.json")])
    assert code == 1
    err = capsys.readouterr().err.strip()
    payload = json.loads(err)
    assert payload["error"] == "config"
    assert str(tmp_path / "nope.json") in payload["message"]


def test_unknown_config_keys_rejected(tmp_path):
    path = small_config(tmp_path)
    doc = json.loads(open(path).read())
    doc["surprise"] = 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code = main(["simulate", "--config", str(bad)])
    assert code == 1


def test_config_requires_capacity_choice(tmp_path):
    path = small_config(tmp_path, cache={"capacities": [8, 64]})
    with pytest.raises(ConfigError):
        load_config(path)


def test_trace_id_must_not_contain_commas(tmp_path):
    with pytest.raises(ConfigError):
        parse_config({
            "trace": {"kind": "constant_loop", "id": "a,b",
                      "params": {"lines": 2, "iterations": 2}},
            "cache": {"capacities": [4]},
        })


def test_simulate_writes_missrates(tmp_path):
    cfg_path = small_config(tmp_path)
    assert main(["simulate", "--config", cfg_path]) == 0
    out = tmp_path / "out"
    rates = artifacts.read_missrates_csv(str(out / "missrates.csv"))
    assert 64 in rates
    assert len(rates[64]) > 10
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert "cachebound" in manifest["versions"]


def test_all_emits_every_artifact(tmp_path):
    cfg_path = small_config(tmp_path)
    assert main(["all", "--config", cfg_path, "--jobs", "2"]) == 0
    out = tmp_path / "out"
    for name in ("missrates.csv", "dataset.csv", "boundary.csv",
                 "frontier.csv", "phases.csv", "heatmap.csv", "manifest.json"):
        assert (out / name).exists(), name
    records = artifacts.read_boundary_csv(str(out / "boundary.csv"))
    assert len(records) == 2 * 1 * 4 * 7
    headers = {
        "missrates.csv": artifacts.MISSRATES_HEADER,
        "dataset.csv": artifacts.DATASET_HEADER,
        "boundary.csv": artifacts.BOUNDARY_HEADER,
        "frontier.csv": artifacts.BOUNDARY_HEADER,
        "phases.csv": artifacts.PHASES_HEADER,
        "heatmap.csv": artifacts.HEATMAP_HEADER,
    }
    for name, header in headers.items():
        first = (out / name).read_text().splitlines()[0]
        assert first == header, name


def test_sweep_from_clean_dirs_is_byte_identical(tmp_path):
    cfg_path = small_config(tmp_path)
    outs = []
    for run_dir in ("a", "b"):
        out = tmp_path / run_dir
        jobs = "1" if run_dir == "a" else "4"
        assert main(["sweep", "--config", cfg_path, "--out", str(out),
                     "--jobs", jobs]) == 0
        outs.append((out / "boundary.csv").read_bytes())
    assert outs[0] == outs[1]


def test_manifest_hash_tracks_config_bytes(tmp_path):
    cfg_path = small_config(tmp_path)
    main(["simulate", "--config", cfg_path])
    out = tmp_path / "out"
    first = json.loads((out / "manifest.json").read_text())["config_sha256"]
    main(["simulate", "--config", cfg_path])
    second = json.loads((out / "manifest.json").read_text())["config_sha256"]
    assert first == second
    # any byte change to the config file changes the hash
    with open(cfg_path, "a") as fh:
        fh.write(" ")
    main(["simulate", "--config", cfg_path])
    third = json.loads((out / "manifest.json").read_text())["config_sha256"]
    assert third != first


def test_stale_dataset_detected(tmp_path):
    cfg_path = small_config(tmp_path)
    assert main(["prepare", "--config", cfg_path]) == 0
    out = tmp_path / "out"
    # corrupt one split label; the sweep stage must refuse to run
    lines = (out / "dataset.csv").read_text().splitlines()
    idx, sym, lab = lines[1].split(",")
    lines[1] = ",".join([idx, sym, "test" if lab == "train" else "train"])
    (out / "dataset.csv").write_text("\n".join(lines) + "\n")
    code = main(["sweep", "--config", cfg_path, "--jobs", "1"])
    assert code == 2


def test_lackey_trace_through_cli(tmp_path):
    from cachebound.trace import constant_loop, serialize_lackey
    trace_file = tmp_path / "t.trace"
    trace_file.write_text(serialize_lackey(constant_loop(lines=8, iterations=50)))
    cfg_path = small_config(
        tmp_path,
        trace={"kind": "lackey", "path": str(trace_file), "id": "loop8"},
        cache={"capacities": [4, 16], "window_instructions": 40},
        preprocess={"chunk_length": 4, "train_fraction": 0.7, "capacity": 4},
    )
    assert main(["prepare", "--config", cfg_path]) == 0
    out = tmp_path / "out"
    symbols, labels = artifacts.read_dataset_csv(str(out / "dataset.csv"))
    # 400 accesses, 4 fetches each: 40 full windows plus the trailing
    # access that lands after the final fetch
    assert len(symbols) == 41
    # loop of 8 lines overflows a 4-line cache: every access misses
    assert (symbols == 99).all()
    manifest = json.loads((out / "manifest.json").read_text())
    assert str(trace_file) in manifest["inputs"]
