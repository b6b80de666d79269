"""Traces in, windowed LRU miss rates out.

Shows the three synthetic generators, Lackey-format parsing, stack
distances, and the one-pass multi-capacity miss-rate computation.
"""

import numpy as np

from cachebound import (constant_loop, miss_rate_series, parse_lackey,
                        periodic_phases, random_walk, stack_distances)

# --- parsing the Lackey text format ---------------------------------------

lackey_text = """\
==4528== Lackey output starts here
I  0400d7d4,8
 L 04f2b0a0,8
 S 04f2b0a8,8
 M ffefffb58,4
I  0400d7e0,8
"""
trace = parse_lackey(lackey_text.splitlines(), source_id="snippet")
print(f"parsed {len(trace)} events ({trace.skipped_lines} non-record lines skipped)")
print(f"instruction fetches: {trace.instruction_count}, "
      f"data accesses: {trace.data_access_count}")

# --- stack distances -------------------------------------------------------

# A loop over 4 lines: first pass is all cold misses, after that every
# access finds its line exactly 4 distinct lines deep.
loop = constant_loop(lines=4, iterations=3)
print("\nconstant_loop(4 lines x 3) stack distances:",
      stack_distances(loop).distances)

# --- windowed miss rates, several capacities in one pass -------------------

phased = periodic_phases([{"lines": 16}, {"lines": 4096}],
                         phase_length=2500, cycles=4)
series = miss_rate_series(phased, [16, 64, 256], window_instructions=1000)
for s in series:
    print(f"\ncapacity {s.cache_lines:4d} lines: "
          f"{len(s.rates)} windows, miss rate "
          f"min {s.rates.min():.3f} / mean {s.rates.mean():.3f} / max {s.rates.max():.3f}")

# The inclusion property: a larger LRU cache never misses more, window
# by window, exactly.
for small, large in zip(series, series[1:]):
    assert (large.rates <= small.rates).all()
print("\ninclusion property holds on every window")

# A random walk has no long-term period; its miss rate wanders.
walk = random_walk(span=16384, accesses=50_000, seed=7)
rates = miss_rate_series(walk, [64], window_instructions=1000)[0].rates
print(f"random_walk rates: first 10 windows -> {np.round(rates[:10], 3)}")
