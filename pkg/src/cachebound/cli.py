"""Command-line pipeline: simulate | prepare | sweep | analyze | all.

Each subcommand recomputes its own artifact and reuses prerequisite
artifacts already present in the output directory (computing them if
missing), so any stage can start from a clean directory.  Flags select
only the subcommand, config path, output dir, and parallelism; all
other parameters live in the JSON config.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import artifacts
from .analysis import local_likelihood_map, segment_phases
from .boundary import checkpoint_name, pareto_frontier, sweep
from .cachesim import miss_rate_series
from .config import RunConfig, load_config
from .errors import CacheBoundError, ConfigError, InputError
from .preprocess import chunk_split, discretize_rates
from .seqmodel import apply_threshold, load_model
from .trace import generate_synthetic, load_trace

STAGES = ("simulate", "prepare", "sweep", "analyze", "all")


def _resolve_trace_id(cfg: RunConfig) -> str:
    if cfg.trace.trace_id:
        return cfg.trace.trace_id
    if cfg.trace.kind == "lackey":
        base = os.path.basename(cfg.trace.path)
        return base.rsplit(".", 1)[0].replace(",", ";")
    return f"{cfg.trace.kind}-s{cfg.trace.seed}"


def _build_trace(cfg: RunConfig, inputs: dict[str, str]):
    if cfg.trace.kind == "lackey":
        if not os.path.exists(cfg.trace.path):
            raise InputError(f"trace file not found: {cfg.trace.path}")
        inputs[cfg.trace.path] = artifacts.sha256_file(cfg.trace.path)
        return load_trace(cfg.trace.path, source_id=_resolve_trace_id(cfg))
    return generate_synthetic(cfg.trace.kind, cfg.trace.params, seed=cfg.trace.seed)


def stage_simulate(cfg: RunConfig, outdir: str, inputs: dict[str, str]) -> str:
    trace = _build_trace(cfg, inputs)
    series = miss_rate_series(trace, list(cfg.cache.capacities),
                              line_size=cfg.cache.line_size,
                              window_instructions=cfg.cache.window_instructions)
    path = os.path.join(outdir, "missrates.csv")
    artifacts.write_missrates_csv(path, series)
    return path


def _ensure(path: str, builder, inputs: dict[str, str]) -> str:
    if not os.path.exists(path):
        builder()
    inputs[path] = artifacts.sha256_file(path)
    return path


def stage_prepare(cfg: RunConfig, outdir: str, inputs: dict[str, str]) -> str:
    missrates = os.path.join(outdir, "missrates.csv")
    _ensure(missrates, lambda: stage_simulate(cfg, outdir, inputs), inputs)
    by_capacity = artifacts.read_missrates_csv(missrates)
    capacity = cfg.preprocess.capacity
    if capacity not in by_capacity:
        raise InputError(f"{missrates} has no rows for capacity {capacity}")
    rates = by_capacity[capacity]
    seq = discretize_rates(rates, epsilon=cfg.preprocess.epsilon,
                           bin_count=cfg.preprocess.bins)
    split = chunk_split(seq.symbols, cfg.preprocess.chunk_length,
                        cfg.preprocess.train_fraction, seed=cfg.preprocess.split_seed)
    path = os.path.join(outdir, "dataset.csv")
    artifacts.write_dataset_csv(path, seq.symbols, split.split_of())
    return path


def _load_dataset(cfg: RunConfig, outdir: str, inputs: dict[str, str]):
    """Symbols plus the chunk structure implied by the config."""
    dataset = os.path.join(outdir, "dataset.csv")
    _ensure(dataset, lambda: stage_prepare(cfg, outdir, inputs), inputs)
    symbols, labels = artifacts.read_dataset_csv(dataset)
    split = chunk_split(symbols, cfg.preprocess.chunk_length,
                        cfg.preprocess.train_fraction, seed=cfg.preprocess.split_seed)
    if not np.array_equal(split.split_of(), labels):
        raise InputError(f"{dataset} split labels do not match the configured "
                         f"chunking; regenerate with `prepare`")
    return symbols, split


def stage_sweep(cfg: RunConfig, outdir: str, inputs: dict[str, str],
                n_jobs: int) -> str:
    symbols, split = _load_dataset(cfg, outdir, inputs)
    sweep_cfg = dataclasses.replace(
        cfg.sweep, trace_id=_resolve_trace_id(cfg),
        checkpoint_dir=os.path.join(outdir, "checkpoints"))
    records = sweep(sweep_cfg, split.train_arrays(symbols),
                    split.test_arrays(symbols), n_jobs=n_jobs)
    path = os.path.join(outdir, "boundary.csv")
    artifacts.write_boundary_csv(path, records)
    return path


def _frontier_models(cfg: RunConfig, curve, outdir: str):
    """Load checkpoints for up to max_heatmap_models frontier points."""
    n = len(curve.points)
    take = min(cfg.analysis.max_heatmap_models, n)
    indices = np.unique(np.linspace(0, n - 1, take).round().astype(int))
    models = []
    for idx in indices:
        record = curve.points[idx]
        try:
            beta_index = cfg.sweep.beta_grid.index(record.beta)
        except ValueError:
            raise InputError(f"boundary.csv beta {record.beta!r} is not in the "
                             f"configured beta grid; regenerate with `sweep`") from None
        path = os.path.join(outdir, "checkpoints",
                            checkpoint_name(record.seed, record.width, beta_index))
        if not os.path.exists(path):
            raise InputError(f"missing checkpoint {path}; regenerate with `sweep`")
        models.append(apply_threshold(load_model(path), record.g_min))
    return models


def stage_analyze(cfg: RunConfig, outdir: str, inputs: dict[str, str],
                  n_jobs: int) -> list[str]:
    boundary = os.path.join(outdir, "boundary.csv")
    _ensure(boundary, lambda: stage_sweep(cfg, outdir, inputs, n_jobs), inputs)
    symbols, split = _load_dataset(cfg, outdir, inputs)
    records = artifacts.read_boundary_csv(boundary)
    if not records:
        raise InputError(f"{boundary} contains no records")

    curve = pareto_frontier(records, loss_field=f"loss_{cfg.analysis.frontier_loss}")
    frontier_path = os.path.join(outdir, "frontier.csv")
    artifacts.write_boundary_csv(frontier_path, curve.points)

    segmentation = segment_phases(curve)
    trace_id = records[0].trace_id
    phases_path = os.path.join(outdir, "phases.csv")
    artifacts.write_phases_csv(phases_path, trace_id, segmentation)

    models = _frontier_models(cfg, curve, outdir)
    chunks = sorted(split.train_chunks + split.test_chunks)
    lmap = local_likelihood_map(models, symbols,
                                window_length=cfg.analysis.heatmap_window,
                                chunks=chunks, trace_id=trace_id)
    heatmap_path = os.path.join(outdir, "heatmap.csv")
    artifacts.write_heatmap_csv(heatmap_path, lmap)
    return [frontier_path, phases_path, heatmap_path]


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cachebound",
        description="Cost-quality boundary exploration for cache miss-rate models")
    parser.add_argument("stage", choices=STAGES)
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides config output_dir)")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="parallel trainings (default: available cores)")
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    outdir = args.out if args.out is not None else cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")

    inputs: dict[str, str] = {}
    if args.stage == "simulate":
        stage_simulate(cfg, outdir, inputs)
    elif args.stage == "prepare":
        stage_prepare(cfg, outdir, inputs)
    elif args.stage == "sweep":
        stage_sweep(cfg, outdir, inputs, args.jobs)
    elif args.stage == "analyze":
        stage_analyze(cfg, outdir, inputs, args.jobs)
    else:  # all: recompute every stage in order
        stage_simulate(cfg, outdir, inputs)
        stage_prepare(cfg, outdir, inputs)
        stage_sweep(cfg, outdir, inputs, args.jobs)
        stage_analyze(cfg, outdir, inputs, args.jobs)

    artifacts.write_manifest(os.path.join(outdir, "manifest.json"),
                             cfg.raw_bytes, args.stage, inputs)
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except CacheBoundError as exc:
        kind = {1: "config", 2: "input", 3: "numerical"}[exc.exit_code]
        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
