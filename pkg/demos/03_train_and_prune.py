"""Gated training and threshold pruning on a small dataset.

Every parameter carries a gate in (0, 1); the penalty beta * sum(gates)
pushes gates toward zero, and thresholding them afterwards turns one
trained model into a family of pruned models at different costs.
"""

import numpy as np

from cachebound import (TrainConfig, apply_threshold, cost_j, init_model,
                        sequences_nll, train)

rng = np.random.default_rng(0)
# a noisy two-level sequence: mostly symbol 10 or 90, depending on a
# slow square wave
wave = (np.arange(600) // 30) % 2
symbols = np.where(wave, 90, 10) + rng.integers(-2, 3, size=600)
chunks = [symbols[:480]]
test = [symbols[480:]]

model = init_model(d_in=8, width=16, horizon=16, seed=0)
print(f"architecture {model.arch.describe()}: {model.arch.param_count()} parameters")

for beta in (0.0, 0.003, 0.03):
    trained, history = train(model, chunks, beta,
                             TrainConfig(steps=300, batch_size=16, learning_rate=0.02))
    gates = trained.flat_gates()
    loss, n = sequences_nll(trained, chunks)
    print(f"\nbeta={beta:g}: per-symbol train loss {loss / n:.3f}, "
          f"mean gate {gates.mean():.3f}, gates below 0.5: {(gates < 0.5).mean():.0%}")

    # one trained model, many pruned models
    for g_min in (0.2, 0.5, 0.8):
        pruned = apply_threshold(trained, g_min)
        p_loss, p_n = sequences_nll(pruned, test)
        print(f"  g_min={g_min}: J={cost_j(pruned):5d}  "
              f"per-symbol test loss {p_loss / p_n:.3f}")
