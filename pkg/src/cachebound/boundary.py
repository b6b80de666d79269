"""Boundary estimation: train across a beta grid, threshold, take the envelope.

For each (seed, width, beta) a model is trained once under the gate
penalty; ascending gate thresholds then carve out a family of pruned
models whose (parameter count, loss) points populate the cost-quality
plane.  The lower-left Pareto envelope of those points is the estimated
boundary.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericalError
from .seqmodel import (GatedModel, apply_threshold, cost_j, init_model,
                       objective_grad, save_model, sequences_nll)

BATCH_RNG_TAG = 0x5EED  # separates batch sampling from init streams


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    batch_size: int = 16
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError(f"training budget must be >= 1 step, got {self.steps}")
        if self.batch_size < 1 or self.learning_rate <= 0:
            raise ConfigError("batch_size must be >= 1 and learning_rate > 0")


class _Adam:
    """Standard first-order moment-based update over a dict of tensors."""

    def __init__(self, params: dict, cfg: TrainConfig):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0
        self.cfg = cfg

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c = self.cfg
        bc1 = 1.0 - c.adam_beta1 ** self.t
        bc2 = 1.0 - c.adam_beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = c.adam_beta1 * self.m[k] + (1.0 - c.adam_beta1) * g
            self.v[k] = c.adam_beta2 * self.v[k] + (1.0 - c.adam_beta2) * g * g
            params[k] -= c.learning_rate * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + c.adam_eps)


def _window_index(chunks: list[np.ndarray], window_len: int):
    """All (chunk, start) positions that can host a full training window."""
    spans = []
    for ci, chunk in enumerate(chunks):
        n_starts = len(chunk) - window_len
        if n_starts > 0:
            spans.append((ci, n_starts))
    if not spans:
        raise ConfigError(f"no chunk is long enough for training windows of {window_len + 1} symbols")
    counts = np.array([s[1] for s in spans])
    return spans, np.cumsum(counts)


def train(model: GatedModel, train_chunks: list[np.ndarray], beta: float,
          config: TrainConfig) -> tuple[GatedModel, list[tuple[int, float]]]:
    """Optimize NLL + beta * sum(gates); returns (trained copy, history).

    Deterministic given (model seed, data, config): batch sampling draws
    from a generator seeded by the model seed, and the input model is
    never mutated.  History holds (step, mean objective) per epoch,
    where an epoch is one pass-equivalent over the training positions.
    """
    if beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    model = model.copy()
    horizon = model.arch.horizon
    max_len = max(len(c) for c in train_chunks) if train_chunks else 0
    if max_len < 2:
        raise ConfigError("training data must contain a chunk with >= 2 symbols")
    window_len = min(horizon, max_len - 1)
    spans, cum = _window_index(train_chunks, window_len)
    total_positions = int(cum[-1])

    rng = np.random.default_rng([np.uint64(model.seed), np.uint64(BATCH_RNG_TAG)])
    opt_theta = _Adam(model.theta, config)
    opt_z = _Adam(model.z, config)

    per_step_symbols = config.batch_size * window_len
    epoch_steps = max(1, int(round(total_positions / per_step_symbols)))
    history: list[tuple[int, float]] = []
    acc = 0.0
    for step in range(1, config.steps + 1):
        flat = rng.integers(0, total_positions, size=config.batch_size)
        windows = np.empty((config.batch_size, window_len + 1), dtype=np.int64)
        for b, pos in enumerate(flat):
            si = int(np.searchsorted(cum, pos, side="right"))
            start = int(pos - (cum[si - 1] if si else 0))
            ci = spans[si][0]
            windows[b] = train_chunks[ci][start:start + window_len + 1]
        try:
            g_theta, g_z, objective = objective_grad(model, windows, beta)
        except NumericalError as exc:
            raise NumericalError(f"training diverged at step {step}: {exc}") from exc
        if not np.isfinite(objective):
            raise NumericalError(f"training diverged at step {step}: non-finite objective")
        opt_theta.step(model.theta, g_theta)
        opt_z.step(model.z, g_z)
        acc += objective
        if step % epoch_steps == 0 or step == config.steps:
            history.append((step, acc / (step - (history[-1][0] if history else 0))))
            acc = 0.0
    return model, history


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WidthSpec:
    width: int
    ff_widths: tuple[int, int, int, int] | None = None


@dataclass(frozen=True)
class SweepConfig:
    beta_grid: tuple[float, ...]
    gmin_grid: tuple[float, ...]
    seeds: tuple[int, ...]
    widths: tuple[WidthSpec, ...]
    d_in: int
    horizon: int
    train: TrainConfig
    vocab: int = 100
    trace_id: str = ""
    checkpoint_dir: str | None = None

    def __post_init__(self):
        for name, grid in (("beta_grid", self.beta_grid), ("gmin_grid", self.gmin_grid)):
            if len(grid) == 0:
                raise ConfigError(f"{name} must not be empty")
            if any(b >= a for b, a in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be strictly ascending")
        if any(b < 0 for b in self.beta_grid):
            raise ConfigError("beta values must be >= 0")
        if any(not 0.0 < g <= 1.0 for g in self.gmin_grid):
            raise ConfigError("g_min values must lie in (0, 1]")
        if not self.seeds or not self.widths:
            raise ConfigError("need at least one seed and one width")


@dataclass
class ModelRecord:
    """One (trained model, threshold) evaluation point."""

    trace_id: str
    seed: int
    width: str  # architecture descriptor
    beta: float
    g_min: float
    cost_j: int
    loss_train: float
    loss_test: float
    loss_per_symbol_train: float
    loss_per_symbol_test: float
    status: str = "ok"
    checkpoint_path: str | None = None

    def sort_key(self):
        return (self.seed, self.width, self.beta, self.g_min)


def checkpoint_name(seed: int, width_desc: str, beta_index: int) -> str:
    return f"model_s{seed}_{width_desc}_b{beta_index:03d}.npz"


def _run_unit(config: SweepConfig, seed: int, wspec: WidthSpec, beta_index: int,
              train_chunks: list[np.ndarray], test_chunks: list[np.ndarray],
              ) -> list[ModelRecord]:
    """Train one (seed, width, beta) model and evaluate every threshold."""
    beta = config.beta_grid[beta_index]
    model = init_model(config.d_in, wspec.width, wspec.ff_widths,
                       horizon=config.horizon, seed=seed, vocab=config.vocab)
    desc = model.arch.describe()
    base = dict(trace_id=config.trace_id, seed=seed, width=desc, beta=beta)
    try:
        trained, _ = train(model, train_chunks, beta, config.train)
    except NumericalError:
        return [ModelRecord(**base, g_min=g, cost_j=0, loss_train=np.nan,
                            loss_test=np.nan, loss_per_symbol_train=np.nan,
                            loss_per_symbol_test=np.nan, status="failed")
                for g in config.gmin_grid]

    ckpt = None
    if config.checkpoint_dir is not None:
        ckpt = os.path.join(config.checkpoint_dir, checkpoint_name(seed, desc, beta_index))
        save_model(trained, ckpt)

    n_train = sum(len(c) for c in train_chunks)
    n_test = sum(len(c) for c in test_chunks)
    records = []
    for g_min in config.gmin_grid:
        pruned = apply_threshold(trained, g_min)
        loss_train, _ = sequences_nll(pruned, train_chunks)
        loss_test, _ = sequences_nll(pruned, test_chunks)
        records.append(ModelRecord(
            **base, g_min=g_min, cost_j=cost_j(pruned),
            loss_train=loss_train, loss_test=loss_test,
            loss_per_symbol_train=loss_train / n_train,
            loss_per_symbol_test=loss_test / n_test if n_test else np.nan,
            checkpoint_path=ckpt))
    return records


def sweep(config: SweepConfig, train_chunks: list[np.ndarray],
          test_chunks: list[np.ndarray], n_jobs: int = 1) -> list[ModelRecord]:
    """Run the full grid; output order is independent of scheduling.

    Trainings are shared-nothing and may run in worker processes; a
    failed training yields records with status="failed" and the sweep
    continues.  Every training failing is an error.
    """
    if config.checkpoint_dir is not None:
        os.makedirs(config.checkpoint_dir, exist_ok=True)
    units = [(seed, wspec, bi)
             for seed in config.seeds
             for wspec in config.widths
             for bi in range(len(config.beta_grid))]
    if n_jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_run_unit, config, s, w, bi, train_chunks, test_chunks)
                       for s, w, bi in units]
            results = [f.result() for f in futures]
    else:
        results = [_run_unit(config, s, w, bi, train_chunks, test_chunks)
                   for s, w, bi in units]
    records = [r for unit in results for r in unit]
    if records and all(r.status == "failed" for r in records):
        raise NumericalError("every training in the sweep failed")
    records.sort(key=ModelRecord.sort_key)
    return records


# ---------------------------------------------------------------------------
# Pareto envelope
# ---------------------------------------------------------------------------

@dataclass
class BoundaryCurve:
    """Non-dominated records sorted by ascending cost."""

    points: list[ModelRecord]
    loss_field: str = "loss_train"

    def costs(self) -> np.ndarray:
        return np.array([p.cost_j for p in self.points], dtype=np.float64)

    def losses(self) -> np.ndarray:
        return np.array([getattr(p, self.loss_field) for p in self.points])

    def __len__(self) -> int:
        return len(self.points)


def pareto_frontier(records: list[ModelRecord], loss_field: str = "loss_train") -> BoundaryCurve:
    """Lower-left envelope in (cost, loss) space.

    A record survives iff no other record has both cost <= and loss <=
    with one strict; cost ties keep the lowest loss (exact duplicates
    collapse to one point).  Failed records never enter the frontier.
    """
    ok = [r for r in records if r.status == "ok" and np.isfinite(getattr(r, loss_field))]
    ok.sort(key=lambda r: (r.cost_j, getattr(r, loss_field)))
    points: list[ModelRecord] = []
    best = np.inf
    last_cost: int | None = None
    for r in ok:
        if r.cost_j == last_cost:
            continue
        last_cost = r.cost_j
        loss = getattr(r, loss_field)
        if loss < best:
            points.append(r)
            best = loss
    return BoundaryCurve(points=points, loss_field=loss_field)
