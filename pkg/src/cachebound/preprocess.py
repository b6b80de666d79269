"""Turn miss-rate series into a discrete symbol sequence and split it.

Rates are log10-transformed with a clipped lower bound, binned into a
fixed alphabet, and partitioned into contiguous chunks assigned to
train/test so that every part of the trace is represented in both.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError

EPSILON_DEFAULT = 1e-6
BIN_COUNT_DEFAULT = 100
CHUNK_LENGTH_DEFAULT = 512
TRAIN_FRACTION_DEFAULT = 0.8


def log_clip(rates: np.ndarray, epsilon: float = EPSILON_DEFAULT) -> np.ndarray:
    """log10 of rates, with the lower bound clipped to epsilon.

    Output lies in [log10(epsilon), 0] for any input in [0, 1].
    """
    if not 0.0 < epsilon < 1e-5:
        raise ConfigError(f"epsilon must satisfy 0 < epsilon < 1e-5, got {epsilon}")
    rates = np.asarray(rates, dtype=np.float64)
    if rates.size and (rates.min() < 0.0 or rates.max() > 1.0):
        raise InputError("miss rates must lie in [0, 1]")
    return np.log10(np.maximum(rates, epsilon))


@dataclass
class DiscretizedSequence:
    """The modeling dataset: integer symbols on a fixed bin grid."""

    symbols: np.ndarray  # int64, each in [0, bin_count)
    bin_count: int
    lo: float  # value mapped to symbol 0 (log10 of epsilon)
    hi: float  # value mapped to the last bin
    epsilon: float | None = None

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if self.symbols.size and not (
                0 <= self.symbols.min() and self.symbols.max() < self.bin_count):
            raise ValueError("symbols out of range for bin_count")

    @property
    def n(self) -> int:
        return len(self.symbols)

    def bin_centers(self) -> np.ndarray:
        """Real value at the center of each symbol's bin."""
        width = (self.hi - self.lo) / self.bin_count
        return self.lo + (self.symbols + 0.5) * width


def discretize(values: np.ndarray, bin_count: int = BIN_COUNT_DEFAULT,
               lo: float = np.log10(EPSILON_DEFAULT), hi: float = 0.0,
               epsilon: float | None = None) -> DiscretizedSequence:
    """Bin real values in [lo, hi] into bin_count equally spaced bins.

    lo maps to symbol 0; hi clamps into the last bin.  Values outside
    [lo, hi] indicate an upstream bug and raise :class:`InputError`.
    """
    if bin_count < 2:
        raise ConfigError(f"bin_count must be >= 2, got {bin_count}")
    if not lo < hi:
        raise ConfigError(f"need lo < hi, got [{lo}, {hi}]")
    values = np.asarray(values, dtype=np.float64)
    if values.size and (values.min() < lo or values.max() > hi):
        raise InputError(f"value outside [{lo}, {hi}]; upstream transform is broken")
    raw = np.floor((values - lo) / (hi - lo) * bin_count).astype(np.int64)
    symbols = np.minimum(raw, bin_count - 1)
    return DiscretizedSequence(symbols, bin_count, lo, hi, epsilon=epsilon)


def discretize_rates(rates: np.ndarray, epsilon: float = EPSILON_DEFAULT,
                     bin_count: int = BIN_COUNT_DEFAULT) -> DiscretizedSequence:
    """log_clip then discretize on the [log10(epsilon), 0] grid."""
    transformed = log_clip(rates, epsilon)
    return discretize(transformed, bin_count, lo=float(np.log10(epsilon)), hi=0.0,
                      epsilon=epsilon)


@dataclass
class ChunkSplit:
    """Contiguous [start, end) chunks assigned to train or test."""

    n: int
    chunk_length: int
    train_chunks: list[tuple[int, int]]
    test_chunks: list[tuple[int, int]]

    def split_of(self) -> np.ndarray:
        """Per-symbol split label: 'train' or 'test'."""
        labels = np.empty(self.n, dtype=object)
        for s, e in self.train_chunks:
            labels[s:e] = "train"
        for s, e in self.test_chunks:
            labels[s:e] = "test"
        return labels

    def train_arrays(self, symbols: np.ndarray) -> list[np.ndarray]:
        return [symbols[s:e] for s, e in self.train_chunks]

    def test_arrays(self, symbols: np.ndarray) -> list[np.ndarray]:
        return [symbols[s:e] for s, e in self.test_chunks]


def _test_quotas(sizes: list[int], n_test: int) -> list[int]:
    """Spread the test-chunk budget over the trace thirds.

    Ends of the trace are served first so two test chunks land in
    different halves; quotas are capped at size-1 per third (keeping a
    training chunk everywhere) unless the budget forces otherwise.
    """
    quotas = [0, 0, 0]
    order = itertools.cycle([0, 2, 1])
    for _ in range(n_test):
        quotas[next(order)] += 1
    cap = [max(0, s - 1) for s in sizes]
    overflow = 0
    for i in range(3):
        if quotas[i] > cap[i]:
            overflow += quotas[i] - cap[i]
            quotas[i] = cap[i]
    for i in range(3):
        take = min(cap[i] - quotas[i], overflow)
        quotas[i] += take
        overflow -= take
    for i in range(3):  # last resort: allow all-test thirds
        take = min(sizes[i] - quotas[i], overflow)
        quotas[i] += take
        overflow -= take
    return quotas


def chunk_split(seq, chunk_length: int, train_fraction: float = TRAIN_FRACTION_DEFAULT,
                seed: int = 0) -> ChunkSplit:
    """Partition a sequence into chunks and assign them to train/test.

    The assignment is a pure function of (len(seq), chunk_length,
    train_fraction, seed): test chunks are placed one per stratum of a
    seeded, thirds-stratified interleaving, so both splits draw from all
    parts of the trace.
    """
    n = len(seq)
    if not 1 <= chunk_length <= n:
        raise ConfigError(f"chunk_length must be in [1, {n}], got {chunk_length}")
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_chunks = -(-n // chunk_length)
    if n_chunks < 2:
        raise ConfigError("sequence yields a single chunk; cannot split into train and test")
    n_test = int(round((1.0 - train_fraction) * n_chunks))
    n_test = min(max(n_test, 1), n_chunks - 1)

    thirds = np.array_split(np.arange(n_chunks), 3)
    quotas = _test_quotas([len(t) for t in thirds], n_test)

    rng = np.random.default_rng(np.uint64(seed))
    test_idx: list[int] = []
    for third, quota in zip(thirds, quotas):
        if quota == 0:
            continue
        for stratum in np.array_split(third, quota):
            test_idx.append(int(stratum[rng.integers(len(stratum))]))
    test_set = set(test_idx)

    bounds = [(i * chunk_length, min((i + 1) * chunk_length, n)) for i in range(n_chunks)]
    train_chunks = [b for i, b in enumerate(bounds) if i not in test_set]
    test_chunks = [b for i, b in enumerate(bounds) if i in test_set]
    return ChunkSplit(n=n, chunk_length=chunk_length,
                      train_chunks=train_chunks, test_chunks=test_chunks)
