"""Run configuration: JSON document, schema validation, typed access.

Sweeps have too many parameters for flags; everything lives in one JSON
file validated against a strict schema (unknown keys are rejected) so a
config error surfaces before any compute is spent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import jsonschema
import numpy as np

from .boundary import SweepConfig, TrainConfig, WidthSpec
from .errors import ConfigError
from .preprocess import (BIN_COUNT_DEFAULT, CHUNK_LENGTH_DEFAULT,
                         EPSILON_DEFAULT, TRAIN_FRACTION_DEFAULT)
from .seqmodel import default_ff_widths
from .trace import validate_synthetic_params

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cachebound run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["trace", "cache"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string", "minLength": 1},
        "trace": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["lackey", "constant_loop", "periodic_phases",
                                  "random_walk"]},
                "path": {"type": "string", "minLength": 1},
                "id": {"type": "string", "minLength": 1, "pattern": "^[^,]+$"},
                "seed": {"type": "integer", "minimum": 0},
                "params": {"type": "object"},
            },
        },
        "cache": {
            "type": "object",
            "additionalProperties": False,
            "required": ["capacities"],
            "properties": {
                "line_size": {"type": "integer", "minimum": 1},
                "capacities": {"type": "array", "minItems": 1,
                               "items": {"type": "integer", "minimum": 1}},
                "window_instructions": {"type": "integer", "minimum": 1},
            },
        },
        "preprocess": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "bins": {"type": "integer", "minimum": 2},
                "chunk_length": {"type": "integer", "minimum": 1},
                "train_fraction": {"type": "number", "exclusiveMinimum": 0,
                                   "exclusiveMaximum": 1},
                "capacity": {"type": "integer", "minimum": 1},
                "split_seed": {"type": "integer", "minimum": 0},
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "d_in": {"type": "integer", "minimum": 1},
                "widths": {"type": "array", "minItems": 1,
                           "items": {"type": "integer", "minimum": 1}},
                "ff_widths": {"type": "array", "minItems": 4, "maxItems": 4,
                              "items": {"type": "integer", "minimum": 1}},
                "h": {"type": "integer", "minimum": 1},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta_grid": {"type": "array", "minItems": 1,
                              "items": {"type": "number", "minimum": 0}},
                "gmin_grid": {"type": "array", "minItems": 1,
                              "items": {"type": "number",
                                        "exclusiveMinimum": 0, "maximum": 1}},
                "seeds": {"type": "array", "minItems": 1,
                          "items": {"type": "integer", "minimum": 0}},
                "budget": {"type": "integer", "minimum": 1},
                "batch_size": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "heatmap_window": {"type": "integer", "minimum": 1},
                "max_heatmap_models": {"type": "integer", "minimum": 1},
                "frontier_loss": {"enum": ["train", "test"]},
                "dl": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "a": {"type": "number", "minimum": 0},
                        "b": {"type": "number", "minimum": 0},
                        "c": {"type": "number", "minimum": 0},
                    },
                },
            },
        },
    },
}


def default_beta_grid() -> tuple[float, ...]:
    return tuple(float(b) for b in np.logspace(-6, -1, 12))


def default_gmin_grid() -> tuple[float, ...]:
    return tuple(float(g) for g in np.linspace(0.05, 0.99, 20))


@dataclass(frozen=True)
class TraceConfig:
    kind: str
    path: str | None
    trace_id: str | None
    seed: int
    params: dict


@dataclass(frozen=True)
class CacheConfig:
    line_size: int
    capacities: tuple[int, ...]
    window_instructions: int


@dataclass(frozen=True)
class PreprocessConfig:
    epsilon: float
    bins: int
    chunk_length: int
    train_fraction: float
    capacity: int
    split_seed: int


@dataclass(frozen=True)
class AnalysisConfig:
    heatmap_window: int
    max_heatmap_models: int
    frontier_loss: str
    dl_a: float
    dl_b: float
    dl_c: float


@dataclass(frozen=True)
class RunConfig:
    """Validated view of one run's JSON configuration."""

    trace: TraceConfig
    cache: CacheConfig
    preprocess: PreprocessConfig
    sweep: SweepConfig
    analysis: AnalysisConfig
    output_dir: str
    seed: int
    raw_bytes: bytes = field(repr=False, default=b"")


def _validate_schema(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config schema violation at {where}: {e.message}")


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    cfg = parse_config(doc)
    return RunConfig(**{**cfg.__dict__, "raw_bytes": raw})


def parse_config(doc: dict) -> RunConfig:
    """Validate a config document and apply defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _validate_schema(doc)

    seed = int(doc.get("seed", 0))
    tr = doc["trace"]
    trace = TraceConfig(
        kind=tr["kind"],
        path=tr.get("path"),
        trace_id=tr.get("id"),
        seed=int(tr.get("seed", seed)),
        params=dict(tr.get("params", {})),
    )
    if trace.kind == "lackey":
        if trace.path is None:
            raise ConfigError("trace.kind=lackey requires trace.path")
        if trace.params:
            raise ConfigError("trace.params is only valid for synthetic traces")
    else:
        if trace.path is not None:
            raise ConfigError("trace.path is only valid for trace.kind=lackey")
        validate_synthetic_params(trace.kind, trace.params)

    ca = doc["cache"]
    line_size = int(ca.get("line_size", 64))
    if line_size & (line_size - 1):
        raise ConfigError(f"cache.line_size must be a power of two, got {line_size}")
    cache = CacheConfig(
        line_size=line_size,
        capacities=tuple(int(c) for c in ca["capacities"]),
        window_instructions=int(ca.get("window_instructions", 100_000)),
    )

    pp = doc.get("preprocess", {})
    if "capacity" in pp:
        capacity = int(pp["capacity"])
        if capacity not in cache.capacities:
            raise ConfigError(
                f"preprocess.capacity {capacity} is not in cache.capacities")
    elif len(cache.capacities) == 1:
        capacity = cache.capacities[0]
    else:
        raise ConfigError("preprocess.capacity is required when several "
                          "cache capacities are simulated")
    preprocess = PreprocessConfig(
        epsilon=float(pp.get("epsilon", EPSILON_DEFAULT)),
        bins=int(pp.get("bins", BIN_COUNT_DEFAULT)),
        chunk_length=int(pp.get("chunk_length", CHUNK_LENGTH_DEFAULT)),
        train_fraction=float(pp.get("train_fraction", TRAIN_FRACTION_DEFAULT)),
        capacity=capacity,
        split_seed=int(pp.get("split_seed", seed)),
    )
    if not 0.0 < preprocess.epsilon < 1e-5:
        raise ConfigError(f"preprocess.epsilon must satisfy 0 < eps < 1e-5, "
                          f"got {preprocess.epsilon}")

    mo = doc.get("model", {})
    widths = tuple(int(w) for w in mo.get("widths", (16, 64)))
    ff = mo.get("ff_widths")
    bins = preprocess.bins
    width_specs = []
    for w in widths:
        if ff is not None:
            width_specs.append(WidthSpec(w, tuple(int(x) for x in ff)))
        else:
            width_specs.append(WidthSpec(w, default_ff_widths(w, vocab=bins)))
    sw = doc.get("sweep", {})
    train_cfg = TrainConfig(
        steps=int(sw.get("budget", 300)),
        batch_size=int(sw.get("batch_size", 16)),
        learning_rate=float(sw.get("learning_rate", 1e-3)),
    )
    sweep_cfg = SweepConfig(
        beta_grid=tuple(float(b) for b in sw.get("beta_grid", default_beta_grid())),
        gmin_grid=tuple(float(g) for g in sw.get("gmin_grid", default_gmin_grid())),
        seeds=tuple(int(s) for s in sw.get("seeds", (0, 1, 2))),
        widths=tuple(width_specs),
        d_in=int(mo.get("d_in", 8)),
        horizon=int(mo.get("h", 16)),
        train=train_cfg,
        vocab=bins,
    )

    an = doc.get("analysis", {})
    dl = an.get("dl", {})
    analysis = AnalysisConfig(
        heatmap_window=int(an.get("heatmap_window", 100)),
        max_heatmap_models=int(an.get("max_heatmap_models", 12)),
        frontier_loss=str(an.get("frontier_loss", "train")),
        dl_a=float(dl.get("a", 32.0)),
        dl_b=float(dl.get("b", 1.0)),
        dl_c=float(dl.get("c", 0.0)),
    )

    return RunConfig(trace=trace, cache=cache, preprocess=preprocess,
                     sweep=sweep_cfg, analysis=analysis,
                     output_dir=str(doc.get("output_dir", "out")), seed=seed)
