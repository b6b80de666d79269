"""LRU stack distances and windowed miss rates.

A single pass over the trace yields the stack distance of every data
access; miss rates for any set of fully-associative LRU capacities then
fall out by thresholding (an access with distance d hits a cache of C
lines iff d <= C).  This is the classic stack algorithm: computing the
distance stream once answers all capacities at the same time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .trace import AccessKind, AccessTrace, LINE_SIZE_DEFAULT

WINDOW_INSTRUCTIONS_DEFAULT = 100_000


@dataclass
class StackDistanceStream:
    """Per-data-access reuse distances, in data-access order.

    ``distances[i]`` is the number of distinct lines touched since the
    previous access to the same line, counting the line itself
    (distance 1 = immediate re-reference).  First touches are +inf.
    """

    distances: np.ndarray  # float64; np.inf marks a first touch
    line_size: int
    trace_id: str = ""


@dataclass
class MissRateSeries:
    """Windowed miss rates for one cache capacity over one trace."""

    cache_lines: int
    window_instructions: int
    rates: np.ndarray  # float64 in [0, 1], one per window
    accesses_per_window: np.ndarray  # int64
    trace_id: str = ""

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=np.float64)
        self.accesses_per_window = np.asarray(self.accesses_per_window, dtype=np.int64)
        if self.rates.size and (self.rates.min() < 0.0 or self.rates.max() > 1.0):
            raise ValueError("miss rates must lie in [0, 1]")


class _Fenwick:
    """Binary indexed tree over time slots, one bit per live line."""

    __slots__ = ("n", "tree")

    def __init__(self, n: int):
        self.n = n
        self.tree = [0] * (n + 1)

    def add(self, i: int, delta: int) -> None:
        i += 1
        while i <= self.n:
            self.tree[i] += delta
            i += i & (-i)

    def prefix(self, i: int) -> int:
        """Sum of slots [0..i], inclusive."""
        i += 1
        s = 0
        while i > 0:
            s += self.tree[i]
            i -= i & (-i)
        return s


def _distances_of_lines(lines: list[int]) -> np.ndarray:
    """Stack distances for a pre-mapped line-index sequence.

    Each live line owns one marked time slot (its most recent access).
    The distance of a re-access is then 1 + the number of marks after
    the line's previous slot.  Slots grow monotonically; when the slot
    axis fills up, live marks are compacted to the front, which keeps
    the tree sized to the number of distinct lines and the amortized
    work per access logarithmic in it.
    """
    n = len(lines)
    out = np.empty(n, dtype=np.float64)
    last_slot: dict[int, int] = {}
    capacity = 64
    tree = _Fenwick(capacity)
    live = 0
    t = 0
    for j, line in enumerate(lines):
        prev = last_slot.get(line)
        if prev is None:
            out[j] = np.inf
            live += 1
        else:
            out[j] = (live - tree.prefix(prev)) + 1
            tree.add(prev, -1)
        if t == capacity:
            # Compact: renumber the live-1 marked slots to 0..live-2,
            # preserving recency order; the current line's mark (already
            # cleared above, if it had one) is re-added at live-1 below.
            if prev is None:
                marked = list(last_slot)
            else:
                marked = [ln for ln in last_slot if ln != line]
            marked.sort(key=last_slot.get)
            capacity = max(64, 2 * live)
            tree = _Fenwick(capacity)
            last_slot = {ln: i for i, ln in enumerate(marked)}
            for i in range(len(marked)):
                tree.add(i, 1)
            t = len(marked)
        tree.add(t, 1)
        last_slot[line] = t
        t += 1
    return out


def stack_distances(trace: AccessTrace, line_size: int = LINE_SIZE_DEFAULT) -> StackDistanceStream:
    """Compute the LRU stack distance of every data access.

    Accesses map to the line of their start address
    (``floor(address / line_size)``); spanning accesses touch only that
    line.  Instruction fetches are not data accesses and do not touch
    the simulated cache.
    """
    if line_size < 1 or (line_size & (line_size - 1)) != 0:
        raise ConfigError(f"line_size must be a power of two >= 1, got {line_size}")
    shift = line_size.bit_length() - 1
    line_array = (trace.addresses[trace.data_mask] >> np.uint64(shift))
    distances = _distances_of_lines(line_array.tolist())
    return StackDistanceStream(distances=distances, line_size=line_size,
                               trace_id=trace.source_id)


def _window_indices(trace: AccessTrace, window_instructions: int) -> tuple[np.ndarray, int]:
    """Window index of each data access, plus the emitted window count.

    Windows advance on instruction-fetch count.  All full windows are
    emitted; a trailing partial window is emitted only if it contains at
    least one data access.
    """
    is_instr = trace.kinds == AccessKind.INSTR_FETCH
    instr_before = np.cumsum(is_instr)
    data = trace.data_mask
    win_idx = (instr_before[data] // window_instructions).astype(np.int64)
    n_full = int(is_instr.sum()) // window_instructions
    if win_idx.size:
        n_windows = max(n_full, int(win_idx.max()) + 1)
    else:
        n_windows = n_full
    return win_idx, n_windows


def miss_rate_series(trace: AccessTrace, cache_sizes_lines: list[int],
                     line_size: int = LINE_SIZE_DEFAULT,
                     window_instructions: int = WINDOW_INSTRUCTIONS_DEFAULT,
                     ) -> list[MissRateSeries]:
    """Windowed miss rates for every capacity, from one distance pass.

    A data access misses a cache of C lines iff its stack distance is
    infinite or greater than C.  Windows with no data accesses repeat
    the previous window's rate (the first window defaults to 1.0) so the
    series length depends only on the instruction count.
    """
    if window_instructions < 1:
        raise ConfigError(f"window_instructions must be >= 1, got {window_instructions}")
    for c in cache_sizes_lines:
        if c < 1:
            raise ConfigError(f"cache capacity must be >= 1 line, got {c}")
    if len(trace) == 0:
        return [MissRateSeries(c, window_instructions, np.array([]), np.array([], dtype=np.int64),
                               trace_id=trace.source_id)
                for c in cache_sizes_lines]

    stream = stack_distances(trace, line_size=line_size)
    win_idx, n_windows = _window_indices(trace, window_instructions)
    accesses = np.bincount(win_idx, minlength=n_windows).astype(np.int64)

    out = []
    for c in cache_sizes_lines:
        miss = stream.distances > c  # inf > c, so first touches miss
        miss_counts = np.bincount(win_idx, weights=miss, minlength=n_windows)
        rates = np.empty(n_windows, dtype=np.float64)
        prev = 1.0
        for w in range(n_windows):
            if accesses[w] > 0:
                prev = miss_counts[w] / accesses[w]
            rates[w] = prev
        out.append(MissRateSeries(c, window_instructions, rates, accesses,
                                  trace_id=trace.source_id))
    return out
