"""A small sweep, its Pareto frontier, and the three-phase fit.

Takes a couple of minutes: 2 seeds x 6 betas trained, 8 thresholds each.
"""

import numpy as np

from cachebound import (SweepConfig, TrainConfig, WidthSpec, chunk_split,
                        discretize_rates, miss_rate_series, pareto_frontier,
                        periodic_phases, segment_phases, sweep)

trace = periodic_phases([{"lines": 16}, {"lines": 4096}],
                        phase_length=2500, cycles=12)
rates = miss_rate_series(trace, [64], window_instructions=400)[0].rates
seq = discretize_rates(rates)
split = chunk_split(seq.symbols, 50, 0.8, seed=0)

config = SweepConfig(
    beta_grid=tuple(float(b) for b in np.logspace(-5, -1, 6)),
    gmin_grid=tuple(float(g) for g in np.linspace(0.05, 0.95, 8)),
    seeds=(0, 1),
    widths=(WidthSpec(16),),
    d_in=8,
    horizon=16,
    train=TrainConfig(steps=400, batch_size=16, learning_rate=0.02),
    trace_id="periodic-demo",
)
records = sweep(config, split.train_arrays(seq.symbols),
                split.test_arrays(seq.symbols))
print(f"{len(records)} records "
      f"({len(config.seeds)} seeds x {len(config.beta_grid)} betas "
      f"x {len(config.gmin_grid)} thresholds)")

curve = pareto_frontier(records)
print(f"\nfrontier: {len(curve)} points")
print(f"{'J':>6} {'loss':>10} {'loss/sym':>9}")
for p in curve.points:
    print(f"{p.cost_j:6d} {p.loss_train:10.1f} {p.loss_per_symbol_train:9.3f}")

seg = segment_phases(curve)
print(f"\nphase fit: slopes {tuple(round(s, 2) for s in seg.slopes)}")
print(f"phase 1 -> 2 at J = {seg.b1_cost:.0f}; phase 2 -> 3 at J = {seg.b2_cost:.0f}")
steepest = int(np.argmin(seg.slopes)) + 1
print(f"the steepest segment (phase {steepest}) is where parameters "
      f"buy the most quality per decade")
