"""Independent reference implementations used as test oracles.

These deliberately avoid the package's algorithms: stack distances via a
literal recency stack, miss counts via a real LRU cache simulation, and
gradients via central finite differences.
"""

from collections import OrderedDict

import numpy as np

from cachebound.seqmodel import objective_value
from cachebound.trace import AccessEvent, AccessKind, AccessTrace


def brute_force_stack_distances(lines) -> np.ndarray:
    """O(N*U) recency-stack distances: position of the line from the top."""
    stack: list[int] = []
    out = np.empty(len(lines), dtype=np.float64)
    for j, line in enumerate(lines):
        if line in stack:
            pos = stack.index(line)
            out[j] = pos + 1
            stack.pop(pos)
        else:
            out[j] = np.inf
        stack.insert(0, line)
    return out


def naive_lru_window_misses(trace: AccessTrace, capacity: int, line_size: int,
                            window_instructions: int, n_windows: int) -> np.ndarray:
    """Simulate a real fully-associative LRU cache, counting misses per window."""
    is_instr = trace.kinds == AccessKind.INSTR_FETCH
    instr_before = np.cumsum(is_instr)
    data = trace.data_mask
    win_idx = (instr_before[data] // window_instructions).astype(np.int64).tolist()
    lines = (trace.addresses[data] // np.uint64(line_size)).tolist()

    cache: OrderedDict[int, None] = OrderedDict()
    misses = np.zeros(n_windows, dtype=np.int64)
    for w, line in zip(win_idx, lines):
        if line in cache:
            cache.move_to_end(line)
        else:
            misses[w] += 1
            cache[line] = None
            if len(cache) > capacity:
                cache.popitem(last=False)
    return misses


def random_trace(rng: np.random.Generator, n_accesses: int, n_lines: int = 200,
                 instr_per_access: int = 1) -> AccessTrace:
    """Random data-access trace over a bounded line pool."""
    events = []
    for line in rng.integers(0, n_lines, size=n_accesses):
        for k in range(instr_per_access):
            events.append(AccessEvent(AccessKind.INSTR_FETCH, 0x400000 + 4 * k, 4))
        events.append(AccessEvent(AccessKind.LOAD, int(line) * 64, 8))
    return AccessTrace.from_events(events, source_id="random")


def finite_difference_check(model, batch, beta: float, step: float = 1e-5,
                            rel_tol: float = 1e-4, floor: float = 1e-4):
    """Compare every analytic gradient component to central differences.

    Returns the worst relative error observed; raises AssertionError on
    the first component out of tolerance.
    """
    from cachebound.seqmodel import objective_grad

    grad_theta, grad_z, _ = objective_grad(model, batch, beta)
    worst = 0.0
    for store, grads in ((model.theta, grad_theta), (model.z, grad_z)):
        for name, arr in store.items():
            flat = arr.ravel()
            gflat = grads[name].ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + step
                f_plus = objective_value(model, batch, beta)
                flat[idx] = orig - step
                f_minus = objective_value(model, batch, beta)
                flat[idx] = orig
                fd = (f_plus - f_minus) / (2.0 * step)
                analytic = gflat[idx]
                rel = abs(analytic - fd) / max(abs(analytic), abs(fd), floor)
                assert rel <= rel_tol, (
                    f"{name}[{idx}]: analytic {analytic!r} vs fd {fd!r} (rel {rel:.2e})")
                worst = max(worst, rel)
    return worst
