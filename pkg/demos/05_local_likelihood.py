"""Where in a trace do cheap models fail?

Per-step log-likelihoods, averaged in windows, show which stretches of
the sequence demand costlier models: cheap models track the easy phase
and miss the hard one.
"""

import numpy as np

from cachebound import (TrainConfig, apply_threshold, cost_j, init_model,
                        local_likelihood_map, train)

rng = np.random.default_rng(1)
# alternating easy (constant) and hard (noisy) stretches
blocks = []
for k in range(12):
    if k % 2 == 0:
        blocks.append(np.full(40, 20, dtype=np.int64))
    else:
        blocks.append(rng.integers(60, 90, size=40))
symbols = np.concatenate(blocks)

model = init_model(d_in=8, width=16, horizon=16, seed=0)
trained, _ = train(model, [symbols], 0.002,
                   TrainConfig(steps=400, batch_size=16, learning_rate=0.02))

# prune the one trained model at several thresholds -> models of
# ascending cost
models = [apply_threshold(trained, g) for g in (0.9, 0.6, 0.3, 0.05)]
lmap = local_likelihood_map(models, symbols, window_length=40)

print("rows: models by ascending cost; cols: 40-symbol windows")
print("cell = mean log-likelihood (0 is perfect, ln(0.01) is uniform)\n")
header = " ".join(f"w{w:02d}" for w in range(lmap.grid.shape[1]))
print(f"{'J':>6} | {header}")
for cost, row in zip(lmap.costs, lmap.grid):
    cells = " ".join(f"{v:4.1f}" for v in row)
    print(f"{int(cost):6d} | {cells}")

print("\neven-numbered windows (constant stretch) are cheap to predict;")
print("odd ones stay expensive until the cost budget grows")
