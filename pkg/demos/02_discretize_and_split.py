"""From miss-rate series to the discrete modeling dataset.

Rates are log10-transformed with a clipped floor, binned into 100
symbols, and split into contiguous train/test chunks drawn from all
parts of the trace.
"""

import numpy as np

from cachebound import (chunk_split, discretize_rates, log_clip,
                        miss_rate_series, periodic_phases)

trace = periodic_phases([{"lines": 16}, {"lines": 4096}],
                        phase_length=2500, cycles=8)
rates = miss_rate_series(trace, [64], window_instructions=400)[0].rates
print(f"{len(rates)} windows, rates in [{rates.min():.4f}, {rates.max():.4f}]")

# log10 with the lower bound clipped to epsilon keeps near-zero rates visible
transformed = log_clip(rates, epsilon=1e-6)
print(f"log10 range: [{transformed.min():.2f}, {transformed.max():.2f}]")

seq = discretize_rates(rates, epsilon=1e-6, bin_count=100)
hist = np.bincount(seq.symbols, minlength=100)
print(f"{seq.n} symbols over {np.count_nonzero(hist)} distinct bins; "
      f"most common bin {hist.argmax()} ({hist.max()} hits)")

# Chunks are contiguous; the seeded assignment puts test chunks in every
# third of the trace so both splits see all program behaviors.
split = chunk_split(seq.symbols, chunk_length=50, train_fraction=0.8, seed=0)
print(f"\n{len(split.train_chunks)} train chunks, {len(split.test_chunks)} test chunks")
print("test chunk starts:", [s for s, _ in split.test_chunks])

labels = split.split_of()
for third in range(3):
    lo, hi = third * seq.n // 3, (third + 1) * seq.n // 3
    frac = np.mean(labels[lo:hi] == "test")
    print(f"third {third}: {frac:.0%} of symbols are test")
