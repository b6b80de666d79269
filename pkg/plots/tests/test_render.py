import hashlib
import json
import shutil
import subprocess
import sys

import pytest

from cachebound_plots.cli import main
from cachebound_plots.render import SchemaError, render_boundary, render_heatmap

BOUNDARY_HEADER = ("trace_id,seed,width,beta,g_min,cost_J,loss_train,loss_test,"
                   "loss_per_symbol_train,loss_per_symbol_test,status")
PHASES_HEADER = "trace_id,b1_cost,b2_cost,slope1,slope2,slope3,fit_rss"
HEATMAP_HEADER = "cost_J,window_index,mean_loglik"
DATASET_HEADER = "index,symbol,split"


def write_frontier(path, points=((10, 500.0), (40, 120.0), (200, 30.0), (900, 12.0))):
    rows = [BOUNDARY_HEADER]
    for j, loss in points:
        rows.append(f"t,0,w16,0.001,0.5,{j},{loss},{loss * 1.1},"
                    f"{loss / 100},{loss / 90},ok")
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def write_phases(path, b1=40.0, b2=200.0):
    row = f"t,{b1},{b2},-0.1,-1.3,-0.05,0.01"
    path.write_text("\n".join([PHASES_HEADER, row]) + "\n")
    return str(path)


def write_heatmap(path, n_models=3, n_windows=8):
    rows = [HEATMAP_HEADER]
    for m in range(n_models):
        for w in range(n_windows):
            rows.append(f"{10 ** (m + 1)},{w},{-4.0 + 0.4 * m + 0.05 * w}")
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def write_dataset(path, n=64):
    rows = [DATASET_HEADER]
    for i in range(n):
        rows.append(f"{i},{(i * 13) % 100},{'train' if i % 5 else 'test'}")
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def sha256(path) -> str:
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def test_boundary_smoke(tmp_path):
    out = tmp_path / "boundary.png"
    render_boundary(write_frontier(tmp_path / "f.csv"),
                    write_phases(tmp_path / "p.csv"), str(out))
    assert out.exists() and out.stat().st_size > 1000


def test_boundary_with_record_scatter(tmp_path):
    points = [(10, 500.0), (15, 700.0), (40, 120.0), (200, 30.0), (500, 45.0)]
    records = write_frontier(tmp_path / "b.csv", points)
    out = tmp_path / "boundary.png"
    code = main(["boundary", "--in", write_frontier(tmp_path / "f.csv"),
                 write_phases(tmp_path / "p.csv"), records, "--out", str(out)])
    assert code == 0
    assert out.exists() and out.stat().st_size > 1000


def test_heatmap_smoke(tmp_path):
    out = tmp_path / "heatmap.png"
    render_heatmap(write_heatmap(tmp_path / "h.csv"),
                   write_dataset(tmp_path / "d.csv"), str(out))
    assert out.exists() and out.stat().st_size > 1000


def test_renders_are_deterministic(tmp_path):
    f = write_frontier(tmp_path / "f.csv")
    p = write_phases(tmp_path / "p.csv")
    h = write_heatmap(tmp_path / "h.csv")
    d = write_dataset(tmp_path / "d.csv")
    hashes = set()
    for k in range(2):
        out = tmp_path / f"b{k}.png"
        assert main(["boundary", "--in", f, p, "--out", str(out)]) == 0
        hashes.add(sha256(out))
    assert len(hashes) == 1
    hashes = set()
    for k in range(2):
        out = tmp_path / f"h{k}.png"
        assert main(["heatmap", "--in", h, d, "--out", str(out)]) == 0
        hashes.add(sha256(out))
    assert len(hashes) == 1


def test_rendering_does_not_mutate_inputs(tmp_path):
    f = write_frontier(tmp_path / "f.csv")
    p = write_phases(tmp_path / "p.csv")
    before = (open(f).read(), open(p).read())
    render_boundary(f, p, str(tmp_path / "out.png"))
    assert (open(f).read(), open(p).read()) == before


def test_schema_mismatch_is_exit_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("totally,wrong,header\n1,2,3\n")
    out = tmp_path / "out.png"
    code = main(["boundary", "--in", str(bad),
                 write_phases(tmp_path / "p.csv"), "--out", str(out)])
    assert code == 2
    assert not out.exists()
    code = main(["heatmap", "--in", str(bad),
                 write_dataset(tmp_path / "d.csv"), "--out", str(out)])
    assert code == 2
    assert not out.exists()


def test_empty_frontier_is_exit_2_and_no_file(tmp_path):
    empty = tmp_path / "f.csv"
    empty.write_text(BOUNDARY_HEADER + "\n")
    out = tmp_path / "out.png"
    code = main(["boundary", "--in", str(empty),
                 write_phases(tmp_path / "p.csv"), "--out", str(out)])
    assert code == 2
    assert not out.exists()


def test_missing_input_is_exit_2(tmp_path):
    out = tmp_path / "out.png"
    code = main(["heatmap", "--in", str(tmp_path / "nope.csv"),
                 write_dataset(tmp_path / "d.csv"), "--out", str(out)])
    assert code == 2
    assert not out.exists()


# ---------------------------------------------------------------------------
# End-to-end: CSVs produced by an actual pipeline smoke run
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def smoke_csvs(tmp_path_factory):
    if shutil.which("cachebound") is None:
        pytest.skip("cachebound CLI not installed")
    root = tmp_path_factory.mktemp("smoke")
    config = {
        "seed": 0,
        "output_dir": str(root / "out"),
        "trace": {"kind": "periodic_phases",
                  "params": {"phases": [{"lines": 4}, {"lines": 512}],
                             "phase_length": 600, "cycles": 4}},
        "cache": {"capacities": [64], "window_instructions": 400},
        "preprocess": {"chunk_length": 16, "train_fraction": 0.8},
        "model": {"d_in": 4, "widths": [4], "h": 8},
        "sweep": {"beta_grid": [1e-5, 1e-3, 1e-2, 1e-1],
                  "gmin_grid": [0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.95],
                  "seeds": [0, 1], "budget": 40, "batch_size": 8,
                  "learning_rate": 0.02},
        "analysis": {"heatmap_window": 8, "max_heatmap_models": 4},
    }
    cfg = root / "cfg.json"
    cfg.write_text(json.dumps(config))
    subprocess.run(["cachebound", "all", "--config", str(cfg)], check=True)
    return root / "out"


def test_both_renderers_on_pipeline_output(smoke_csvs, tmp_path):
    b_out = tmp_path / "boundary.png"
    code = main(["boundary", "--in", str(smoke_csvs / "frontier.csv"),
                 str(smoke_csvs / "phases.csv"), str(smoke_csvs / "boundary.csv"),
                 "--out", str(b_out)])
    assert code == 0 and b_out.stat().st_size > 1000
    h_out = tmp_path / "heatmap.png"
    code = main(["heatmap", "--in", str(smoke_csvs / "heatmap.csv"),
                 str(smoke_csvs / "dataset.csv"), "--out", str(h_out)])
    assert code == 0 and h_out.stat().st_size > 1000
    # deterministic at fixed dpi
    b2_out = tmp_path / "boundary2.png"
    main(["boundary", "--in", str(smoke_csvs / "frontier.csv"),
          str(smoke_csvs / "phases.csv"), str(smoke_csvs / "boundary.csv"),
          "--out", str(b2_out)])
    assert sha256(b_out) == sha256(b2_out)
