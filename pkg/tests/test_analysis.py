import numpy as np
import pytest

from cachebound.analysis import (DescriptionLengthBound, description_length,
                                 local_likelihood_map, normalized_loss,
                                 per_step_series, segment_phases)
from cachebound.boundary import BoundaryCurve, ModelRecord
from cachebound.errors import ConfigError, InputError
from cachebound.seqmodel import init_model, nll


def curve_from(costs, losses):
    points = [ModelRecord(trace_id="t", seed=0, width="w", beta=0.0, g_min=0.5,
                          cost_j=int(j), loss_train=float(l), loss_test=float(l),
                          loss_per_symbol_train=float(l), loss_per_symbol_test=float(l))
              for j, l in zip(costs, losses)]
    return BoundaryCurve(points=points)


def test_normalized_loss_examples():
    assert abs(normalized_loss(46.0517, 11) - 4.18652) < 1e-4
    assert normalized_loss(0.0, 5) == 0.0
    assert normalized_loss(10.0, 4) == 10.0 / 4
    with pytest.raises(InputError):
        normalized_loss(1.0, 0)


def test_uniform_per_symbol_limit():
    # Eq-style sum has N-1 terms; per-symbol value approaches ln(100)
    n = 10_000
    loss = (n - 1) * np.log(100)
    assert abs(normalized_loss(loss, n) - np.log(100)) < 1e-3


def make_polyline_curve(n=20, bp=(6, 13), slopes=(-0.05, -1.2, -0.04),
                        noise=0.0, seed=0):
    """Frontier whose log-log shape is an exact 3-segment polyline."""
    log_j = np.linspace(1.0, 6.0, n)
    costs = np.unique(np.round(10 ** log_j).astype(int))
    assert len(costs) == n
    x = np.log10(costs)
    y = np.empty(n)
    y[0] = 2.0
    for i in range(1, n):
        seg = 0 if i < bp[0] else (1 if i < bp[1] else 2)
        y[i] = y[i - 1] + slopes[seg] * (x[i] - x[i - 1])
    if noise:
        y = y + np.random.default_rng(seed).normal(0.0, noise, size=n)
    return curve_from(costs, 10 ** y), costs


def test_segmentation_recovers_noisy_polyline():
    for seed in range(3):
        curve, costs = make_polyline_curve(noise=0.01, seed=seed)
        seg = segment_phases(curve)
        i, j = seg.breakpoint_indices
        assert abs(i - 6) <= 1 and abs(j - 13) <= 1


def test_segmentation_exact_polyline_slopes():
    curve, costs = make_polyline_curve(noise=0.0)
    seg = segment_phases(curve)
    assert seg.breakpoint_indices == (6, 13)
    assert np.allclose(seg.slopes, (-0.05, -1.2, -0.04), atol=1e-9)
    assert seg.b1_cost == costs[6]
    assert seg.b2_cost == costs[13]
    assert seg.fit_rss < 1e-10


def test_segmentation_two_kinks_six_points():
    costs = [1, 10, 100, 1000, 10_000, 100_000]
    losses = 10.0 ** np.array([0.0, 0.0, -3.0, -6.0, -6.0, -6.0])
    seg = segment_phases(curve_from(costs, losses))
    assert seg.breakpoint_indices == (2, 4)
    assert np.allclose(seg.slopes, (0.0, -3.0, 0.0), atol=1e-9)


def test_segmentation_linear_tie_breaks_to_balance():
    costs = np.round(10 ** np.linspace(0, 7, 8)).astype(int)
    losses = 10.0 ** (-0.5 * np.log10(costs))
    seg = segment_phases(curve_from(costs, losses))
    # all splits fit perfectly; documented rule: most balanced, then smallest
    assert seg.breakpoint_indices == (2, 5)


def test_segmentation_needs_six_points():
    curve, _ = make_polyline_curve()
    curve.points = curve.points[:5]
    with pytest.raises(InputError):
        segment_phases(curve)


def test_segmentation_rescale_invariance():
    curve, costs = make_polyline_curve(noise=0.005, seed=1)
    seg = segment_phases(curve)
    scaled = curve_from(costs * 100, 10 ** np.log10([p.loss_train for p in curve.points]))
    seg_scaled = segment_phases(scaled)
    assert seg_scaled.breakpoint_indices == seg.breakpoint_indices
    assert np.allclose(seg_scaled.slopes, seg.slopes, atol=1e-9)
    assert seg_scaled.b1_cost == 100 * seg.b1_cost
    assert seg_scaled.b2_cost == 100 * seg.b2_cost


# ---------------------------------------------------------------------------
# Local likelihood
# ---------------------------------------------------------------------------

def zero_model(seed=0):
    m = init_model(4, 4, horizon=8, seed=seed)
    for k in m.theta:
        m.theta[k][:] = 0.0
    return m


def test_uniform_model_fills_cells_with_log_point_zero_one():
    seq = np.arange(50) % 100
    lmap = local_likelihood_map([zero_model()], seq, window_length=10)
    assert lmap.grid.shape == (1, 5)
    assert np.allclose(lmap.grid, np.log(0.01))


def test_window_length_one_is_identity():
    m = init_model(4, 4, horizon=8, seed=5)
    seq = np.random.default_rng(0).integers(0, 100, size=23)
    series = per_step_series(m, seq)
    lmap = local_likelihood_map([m], seq, window_length=1)
    assert lmap.grid.shape == (1, 23)
    assert np.isnan(lmap.grid[0, 0]) and np.isnan(series[0])
    assert np.array_equal(lmap.grid[0, 1:], series[1:])


def test_rows_reconcile_with_nll():
    rng = np.random.default_rng(2)
    seq = rng.integers(0, 100, size=80)
    for seed in range(3):
        m = init_model(4, 4, horizon=8, seed=seed)
        series = per_step_series(m, seq)
        total = -np.nansum(series)
        reference = nll(m, seq)
        assert abs(total - reference) <= 1e-6 * reference


def test_chunk_resets_in_series():
    m = init_model(4, 4, horizon=8, seed=9)
    rng = np.random.default_rng(3)
    seq = rng.integers(0, 100, size=30)
    chunks = [(0, 12), (12, 30)]
    series = per_step_series(m, seq, chunks=chunks)
    assert np.isnan(series[0]) and np.isnan(series[12])
    expected = nll(m, seq[:12]) + nll(m, seq[12:])
    assert abs(-np.nansum(series) - expected) < 1e-9


def test_rows_sorted_by_ascending_cost():
    seq = np.arange(40) % 100
    big = init_model(4, 8, horizon=8, seed=0)
    small = init_model(4, 2, horizon=8, seed=0)
    lmap = local_likelihood_map([big, small], seq, window_length=10)
    assert lmap.costs[0] < lmap.costs[1]
    assert lmap.grid.shape == (2, 4)


def test_grid_cells_are_nonpositive():
    m = init_model(4, 4, horizon=8, seed=1)
    seq = np.random.default_rng(1).integers(0, 100, size=64)
    lmap = local_likelihood_map([m], seq, window_length=16)
    assert (lmap.grid <= 0).all()


# ---------------------------------------------------------------------------
# Description length
# ---------------------------------------------------------------------------

def test_description_length_examples():
    got = description_length(1000, a=32, b=1, n=10**6, c=0)
    assert abs(got - (32_000 + np.log2(10**6))) < 1e-9
    assert abs(got - 32019.93) < 0.01
    assert description_length(0, a=32, b=2, n=1024, c=7) == 2 * 10 + 7
    assert description_length(5, a=0, b=0, n=1, c=0) == 0.0


def test_description_length_validation():
    with pytest.raises(ConfigError):
        description_length(-1, n=10)
    with pytest.raises(ConfigError):
        description_length(1, n=0)
    with pytest.raises(ConfigError):
        description_length(1, a=-2, n=10)


def test_description_length_bound_dataclass():
    bound = DescriptionLengthBound(a=32, b=1, n=2**20, c=5)
    assert bound.bits(10) == 32 * 10 + 20 + 5
    assert bound.bits(0) <= bound.bits(100)
