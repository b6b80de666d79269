"""File artifacts: CSV formats, atomic writes, run manifest.

All CSVs are UTF-8 with LF line endings and fixed headers (documented
in docs/formats.md).  Files are written to a temp path and renamed into
place so a crash never leaves a half-written table.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import sys
import tempfile

import numpy as np

from .boundary import ModelRecord
from .cachesim import MissRateSeries
from .errors import InputError

MISSRATES_HEADER = "window_index,cache_lines,miss_rate,accesses"
DATASET_HEADER = "index,symbol,split"
BOUNDARY_HEADER = ("trace_id,seed,width,beta,g_min,cost_J,loss_train,loss_test,"
                   "loss_per_symbol_train,loss_per_symbol_test,status")
PHASES_HEADER = "trace_id,b1_cost,b2_cost,slope1,slope2,slope3,fit_rss"
HEATMAP_HEADER = "cost_J,window_index,mean_loglik"


def atomic_write_text(path: str, text: str) -> None:
    """Write via temp file + rename; partial tables never hit `path`."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _f(x: float) -> str:
    """Shortest round-trip decimal form; deterministic for a given value."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# missrates.csv
# ---------------------------------------------------------------------------

def write_missrates_csv(path: str, series: list[MissRateSeries]) -> None:
    lines = [MISSRATES_HEADER]
    if series:
        n_windows = len(series[0].rates)
        for w in range(n_windows):
            for s in series:
                lines.append(f"{w},{s.cache_lines},{s.rates[w]:.9g},"
                             f"{s.accesses_per_window[w]}")
    lines.append("")
    atomic_write_text(path, "\n".join(lines))


def read_missrates_csv(path: str) -> dict[int, np.ndarray]:
    """Rates per capacity, window-ordered."""
    rates: dict[int, list[float]] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != MISSRATES_HEADER:
            raise InputError(f"{path}: unexpected header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            _, cap, rate, _ = line.rstrip("\n").split(",")
            rates.setdefault(int(cap), []).append(float(rate))
    return {cap: np.array(vals) for cap, vals in rates.items()}


# ---------------------------------------------------------------------------
# dataset.csv
# ---------------------------------------------------------------------------

def write_dataset_csv(path: str, symbols: np.ndarray, split_labels: np.ndarray) -> None:
    lines = [DATASET_HEADER]
    for i, (sym, lab) in enumerate(zip(symbols, split_labels)):
        lines.append(f"{i},{int(sym)},{lab}")
    lines.append("")
    atomic_write_text(path, "\n".join(lines))


def read_dataset_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    symbols, labels = [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != DATASET_HEADER:
            raise InputError(f"{path}: unexpected header {header!r}")
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            idx, sym, lab = line.rstrip("\n").split(",")
            if int(idx) != i:
                raise InputError(f"{path}: non-contiguous index at row {i}")
            if lab not in ("train", "test"):
                raise InputError(f"{path}: bad split label {lab!r}")
            symbols.append(int(sym))
            labels.append(lab)
    return np.array(symbols, dtype=np.int64), np.array(labels, dtype=object)


# ---------------------------------------------------------------------------
# boundary.csv / frontier.csv
# ---------------------------------------------------------------------------

def _record_row(r: ModelRecord) -> str:
    return ",".join([
        r.trace_id, str(r.seed), r.width, _f(r.beta), _f(r.g_min), str(r.cost_j),
        _f(r.loss_train), _f(r.loss_test), _f(r.loss_per_symbol_train),
        _f(r.loss_per_symbol_test), r.status,
    ])


def write_boundary_csv(path: str, records: list[ModelRecord]) -> None:
    lines = [BOUNDARY_HEADER]
    lines.extend(_record_row(r) for r in records)
    lines.append("")
    atomic_write_text(path, "\n".join(lines))


def read_boundary_csv(path: str) -> list[ModelRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != BOUNDARY_HEADER:
            raise InputError(f"{path}: unexpected header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            cols = line.rstrip("\n").split(",")
            if len(cols) != 11:
                raise InputError(f"{path}: expected 11 columns, got {len(cols)}")
            records.append(ModelRecord(
                trace_id=cols[0], seed=int(cols[1]), width=cols[2],
                beta=float(cols[3]), g_min=float(cols[4]), cost_j=int(cols[5]),
                loss_train=float(cols[6]), loss_test=float(cols[7]),
                loss_per_symbol_train=float(cols[8]),
                loss_per_symbol_test=float(cols[9]), status=cols[10]))
    return records


# ---------------------------------------------------------------------------
# phases.csv / heatmap.csv
# ---------------------------------------------------------------------------

def write_phases_csv(path: str, trace_id: str, segmentation) -> None:
    s = segmentation
    row = ",".join([trace_id, _f(s.b1_cost), _f(s.b2_cost),
                    _f(s.slopes[0]), _f(s.slopes[1]), _f(s.slopes[2]),
                    _f(s.fit_rss)])
    atomic_write_text(path, "\n".join([PHASES_HEADER, row, ""]))


def write_heatmap_csv(path: str, lmap) -> None:
    lines = [HEATMAP_HEADER]
    for row, cost in enumerate(lmap.costs):
        for w in range(lmap.grid.shape[1]):
            lines.append(f"{int(cost)},{w},{_f(lmap.grid[row, w])}")
    lines.append("")
    atomic_write_text(path, "\n".join(lines))


# ---------------------------------------------------------------------------
# manifest.json
# ---------------------------------------------------------------------------

def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: str, config_bytes: bytes, command: str,
                   inputs: dict[str, str]) -> None:
    import cachebound

    manifest = {
        "config_sha256": sha256_bytes(config_bytes),
        "command": command,
        "versions": {
            "cachebound": cachebound.__version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "inputs": dict(sorted(inputs.items())),
    }
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
