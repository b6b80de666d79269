"""Render boundary and local-likelihood figures from CSV artifacts.

Inputs are validated against their documented headers before any
drawing; a mismatch raises :class:`SchemaError` (CLI exit code 2) and
no output file is created.  Rendering at a fixed dpi on the Agg backend
is deterministic: identical inputs produce identical image bytes.
"""

from __future__ import annotations

import math
import os

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI_DEFAULT = 120

BOUNDARY_HEADER = ("trace_id,seed,width,beta,g_min,cost_J,loss_train,loss_test,"
                   "loss_per_symbol_train,loss_per_symbol_test,status")
PHASES_HEADER = "trace_id,b1_cost,b2_cost,slope1,slope2,slope3,fit_rss"
HEATMAP_HEADER = "cost_J,window_index,mean_loglik"
DATASET_HEADER = "index,symbol,split"

PHASE_COLORS = ("#4878cf", "#6acc65", "#d65f5f")  # phases 1, 2, 3
LOGLIK_RANGE = (-math.log(100.0), 0.0)  # fixed so heatmaps compare across traces


class SchemaError(Exception):
    """Input file missing or not in its documented format."""


def _read_rows(path: str, header: str) -> list[list[str]]:
    if not os.path.exists(path):
        raise SchemaError(f"input file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != header:
            raise SchemaError(f"{path}: expected header {header!r}, got {first!r}")
        n_cols = len(header.split(","))
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            cols = line.rstrip("\n").split(",")
            if len(cols) != n_cols:
                raise SchemaError(f"{path}:{lineno}: expected {n_cols} columns, "
                                  f"got {len(cols)}")
            rows.append(cols)
    return rows


def _boundary_points(path: str) -> tuple[str, np.ndarray, np.ndarray]:
    """trace_id plus (cost, train-loss) arrays of rows with status ok."""
    rows = [r for r in _read_rows(path, BOUNDARY_HEADER) if r[10] == "ok"]
    if not rows:
        raise SchemaError(f"{path}: no usable records")
    trace_id = rows[0][0]
    try:
        costs = np.array([float(r[5]) for r in rows])
        losses = np.array([float(r[6]) for r in rows])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric cost/loss field: {exc}") from exc
    return trace_id, costs, losses


def render_boundary(frontier_csv: str, phases_csv: str, out_image: str,
                    records_csv: str | None = None, dpi: int = DPI_DEFAULT) -> str:
    """Log-log boundary figure with shaded parameter phases.

    The frontier is drawn as a line; if `records_csv` (the full sweep
    table) is given, every record appears as a scatter point behind it.
    Phase regions come from the breakpoints in `phases_csv`.
    """
    trace_id, f_costs, f_losses = _boundary_points(frontier_csv)
    phase_rows = _read_rows(phases_csv, PHASES_HEADER)
    if not phase_rows:
        raise SchemaError(f"{phases_csv}: no rows")
    try:
        b1, b2 = float(phase_rows[0][1]), float(phase_rows[0][2])
    except ValueError as exc:
        raise SchemaError(f"{phases_csv}: non-numeric breakpoint: {exc}") from exc

    scatter = None
    if records_csv is not None:
        _, r_costs, r_losses = _boundary_points(records_csv)
        keep = r_costs >= 1
        scatter = (r_costs[keep], r_losses[keep])

    drawable = f_costs >= 1  # the empty model has no log-log coordinate
    if not drawable.any():
        raise SchemaError(f"{frontier_csv}: no points with cost >= 1")
    f_costs, f_losses = f_costs[drawable], f_losses[drawable]

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    lo = min(f_costs.min(), b1) / 1.5
    hi = max(f_costs.max(), b2) * 1.5
    for (left, right), color, label in zip(
            ((lo, b1), (b1, b2), (b2, hi)), PHASE_COLORS,
            ("phase 1", "phase 2", "phase 3")):
        ax.axvspan(left, right, color=color, alpha=0.18, label=label, lw=0)
    if scatter is not None:
        ax.scatter(scatter[0], scatter[1], s=12, color="#4878cf", alpha=0.45,
                   label="models", zorder=2)
    ax.plot(f_costs, f_losses, "o-", color="#222222", ms=4, lw=1.4,
            label="boundary", zorder=3)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlim(lo, hi)
    ax.set_xlabel("parameters J")
    ax.set_ylabel("negative log likelihood")
    ax.set_title(f"compression boundary: {trace_id}")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_image, dpi=dpi)
    plt.close(fig)
    return out_image


def _heatmap_grid(path: str) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path, HEATMAP_HEADER)
    if not rows:
        raise SchemaError(f"{path}: no rows")
    try:
        costs = np.array([float(r[0]) for r in rows])
        windows = np.array([int(r[1]) for r in rows])
        values = np.array([float(r[2]) for r in rows])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric field: {exc}") from exc
    uniq_costs = np.unique(costs)
    n_windows = int(windows.max()) + 1
    grid = np.full((len(uniq_costs), n_windows), np.nan)
    row_of = {c: i for i, c in enumerate(uniq_costs)}
    for c, w, v in zip(costs, windows, values):
        grid[row_of[c], int(w)] = v
    return uniq_costs, grid


def render_heatmap(heatmap_csv: str, dataset_csv: str, out_image: str,
                   dpi: int = DPI_DEFAULT) -> str:
    """Local-likelihood heatmap with the discretized trace plotted above.

    x: time window; y: model cost ascending; color: mean log-likelihood
    on the fixed scale [-ln(100), 0] so figures compare across traces.
    """
    costs, grid = _heatmap_grid(heatmap_csv)
    rows = _read_rows(dataset_csv, DATASET_HEADER)
    if not rows:
        raise SchemaError(f"{dataset_csv}: no rows")
    try:
        symbols = np.array([int(r[1]) for r in rows])
    except ValueError as exc:
        raise SchemaError(f"{dataset_csv}: non-integer symbol: {exc}") from exc

    window_len = max(1, math.ceil(len(symbols) / grid.shape[1]))
    fig, (ax_trace, ax_map) = plt.subplots(
        2, 1, figsize=(8.0, 5.5), sharex=False,
        gridspec_kw={"height_ratios": (1, 2.6), "hspace": 0.3})

    ax_trace.plot(np.arange(len(symbols)), symbols, lw=0.7, color="#4878cf")
    ax_trace.set_xlim(0, grid.shape[1] * window_len)
    ax_trace.set_ylabel("symbol")
    ax_trace.set_title("discretized trace")

    im = ax_map.imshow(grid, aspect="auto", origin="lower",
                       interpolation="nearest", cmap="magma",
                       vmin=LOGLIK_RANGE[0], vmax=LOGLIK_RANGE[1],
                       extent=(0, grid.shape[1] * window_len, -0.5,
                               len(costs) - 0.5))
    ax_map.set_yticks(np.arange(len(costs)))
    ax_map.set_yticklabels([str(int(c)) for c in costs], fontsize=7)
    ax_map.set_xlabel("symbol index")
    ax_map.set_ylabel("model cost J")
    fig.colorbar(im, ax=ax_map, label="mean log-likelihood")
    fig.savefig(out_image, dpi=dpi)
    plt.close(fig)
    return out_image
