"""Boundary analysis: normalized losses, phase structure, local likelihoods.

The boundary in log-log space typically shows three slope regimes; the
segmentation here finds the two breakpoints by exhaustive least-squares
over frontier points.  Local likelihood maps locate which stretches of
a trace demand costlier models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryCurve
from .errors import ConfigError, InputError
from .seqmodel import Model, cost_j, per_step_loglik

HEATMAP_WINDOW_DEFAULT = 100
LOG_FLOOR = 1e-300  # keeps log10 finite if a loss underflows to zero

DL_BITS_PER_PARAM_DEFAULT = 32.0  # one float32 per surviving parameter
DL_POSITION_MULTIPLIER_DEFAULT = 1.0
DL_CONSTANT_BITS_DEFAULT = 0.0


def normalized_loss(loss: float, n: int) -> float:
    """Loss divided by sequence length, for cross-trace comparison."""
    if n < 1:
        raise InputError(f"sequence length must be >= 1, got {n}")
    return loss / n


# ---------------------------------------------------------------------------
# Phase segmentation
# ---------------------------------------------------------------------------

@dataclass
class PhaseSegmentation:
    """Two breakpoints splitting a frontier into three fitted segments."""

    b1_cost: float
    b2_cost: float
    slopes: tuple[float, float, float]
    fit_rss: float
    breakpoint_indices: tuple[int, int]  # first frontier index of phase 2 / 3


class _SegmentFitter:
    """O(1) least-squares line fits on index ranges via prefix sums."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        z = np.zeros(1)
        self.sx = np.concatenate([z, np.cumsum(x)])
        self.sy = np.concatenate([z, np.cumsum(y)])
        self.sxx = np.concatenate([z, np.cumsum(x * x)])
        self.sxy = np.concatenate([z, np.cumsum(x * y)])
        self.syy = np.concatenate([z, np.cumsum(y * y)])

    def fit(self, a: int, b: int) -> tuple[float, float]:
        """Slope and residual sum of squares over points [a, b)."""
        n = b - a
        sx = self.sx[b] - self.sx[a]
        sy = self.sy[b] - self.sy[a]
        sxx = self.sxx[b] - self.sxx[a]
        sxy = self.sxy[b] - self.sxy[a]
        syy = self.syy[b] - self.syy[a]
        denom = n * sxx - sx * sx
        slope = (n * sxy - sx * sy) / denom
        intercept = (sy - slope * sx) / n
        rss = syy - intercept * sy - slope * sxy
        return slope, max(rss, 0.0)


def segment_phases(curve: BoundaryCurve) -> PhaseSegmentation:
    """Best 3-segment piecewise-linear fit of the frontier in log-log space.

    Every breakpoint pair leaving >= 2 points per segment is tried; the
    pair with minimal total squared residual wins.  Near-ties (within 6
    significant digits) are broken toward the most balanced segment
    sizes, then lexicographically.  Breakpoint costs are the first
    point of phases 2 and 3.
    """
    costs_all = curve.costs()
    losses_all = curve.losses()
    usable = costs_all >= 1  # the empty model has no log-log coordinate
    costs_in, losses_in = costs_all[usable], losses_all[usable]
    n = len(costs_in)
    if n < 6:
        raise InputError(f"phase segmentation needs >= 6 frontier points "
                         f"with cost >= 1, got {n}")
    x = np.log10(costs_in)
    y = np.log10(np.maximum(losses_in, LOG_FLOOR))
    fitter = _SegmentFitter(x, y)
    # cancellation in the prefix-sum rss leaves noise of order
    # eps * n * sum(y^2); residuals below that are exact fits
    noise_floor = 1e-10 * max(1.0, float(np.sum(y * y)))

    best = None
    for i in range(2, n - 3):
        for j in range(i + 2, n - 1):
            s1, r1 = fitter.fit(0, i)
            s2, r2 = fitter.fit(i, j)
            s3, r3 = fitter.fit(j, n)
            rss = r1 + r2 + r3
            sizes = (i, j - i, n - j)
            # quantize so float-noise ties (incl. exact fits) fall through
            # to the balance rule
            rss_key = 0.0 if rss < noise_floor else float(f"{rss:.6e}")
            key = (rss_key, max(sizes) - min(sizes), i, j)
            if best is None or key < best[0]:
                best = (key, (i, j), (s1, s2, s3), rss)
    (_, (i, j), slopes, rss) = best
    return PhaseSegmentation(b1_cost=float(costs_in[i]), b2_cost=float(costs_in[j]),
                             slopes=tuple(float(s) for s in slopes),
                             fit_rss=float(rss), breakpoint_indices=(i, j))


# ---------------------------------------------------------------------------
# Local average likelihood
# ---------------------------------------------------------------------------

@dataclass
class LocalLikelihoodMap:
    """Windowed mean log-likelihood, one row per model (ascending cost)."""

    costs: np.ndarray  # (M,)
    grid: np.ndarray  # (M, ceil(N / window_length))
    window_length: int
    trace_id: str = ""


def _windowed_mean(series: np.ndarray, window_length: int) -> np.ndarray:
    n = len(series)
    n_windows = -(-n // window_length)
    padded = np.full(n_windows * window_length, np.nan)
    padded[:n] = series
    blocks = padded.reshape(n_windows, window_length)
    valid = ~np.isnan(blocks)
    counts = valid.sum(axis=1)
    sums = np.where(valid, blocks, 0.0).sum(axis=1)
    out = np.full(n_windows, np.nan)
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz]
    return out


def per_step_series(model: Model, sequence: np.ndarray,
                    chunks: list[tuple[int, int]] | None = None) -> np.ndarray:
    """Per-step log-likelihood aligned with the sequence.

    Recurrent state resets at each chunk boundary; the first symbol of
    every chunk is unscored (NaN).  With chunks=None the whole sequence
    is one chunk.
    """
    sequence = np.asarray(sequence, dtype=np.int64)
    if chunks is None:
        chunks = [(0, len(sequence))]
    out = np.full(len(sequence), np.nan)
    for start, end in chunks:
        if end - start >= 2:
            out[start:end] = per_step_loglik(model, sequence[start:end])
    return out


def local_likelihood_map(models: list[Model], sequence: np.ndarray,
                         window_length: int = HEATMAP_WINDOW_DEFAULT,
                         chunks: list[tuple[int, int]] | None = None,
                         trace_id: str = "") -> LocalLikelihoodMap:
    """Windowed mean of per-step log-likelihood for each model.

    Rows are ordered by ascending parameter count; grid shape is
    (len(models), ceil(len(sequence) / window_length)).
    """
    if not models:
        raise InputError("need at least one model")
    if window_length < 1:
        raise ConfigError(f"window_length must be >= 1, got {window_length}")
    ordered = sorted(models, key=cost_j)
    rows = []
    for model in ordered:
        series = per_step_series(model, sequence, chunks)
        rows.append(_windowed_mean(series, window_length))
    return LocalLikelihoodMap(costs=np.array([cost_j(m) for m in ordered], dtype=np.float64),
                              grid=np.vstack(rows), window_length=window_length,
                              trace_id=trace_id)


# ---------------------------------------------------------------------------
# Description-length bound
# ---------------------------------------------------------------------------

def description_length(j: int, a: float = DL_BITS_PER_PARAM_DEFAULT,
                       b: float = DL_POSITION_MULTIPLIER_DEFAULT,
                       n: int = 1, c: float = DL_CONSTANT_BITS_DEFAULT) -> float:
    """Bits to encode a pruned model: a*J + b*log2(n) + c.

    `a` is bits per surviving parameter, `b*log2(n)` covers positions in
    a model of at most n parameters, `c` is a fixed overhead.
    """
    if j < 0 or n < 1 or min(a, b, c) < 0:
        raise ConfigError("description_length needs j >= 0, n >= 1, a/b/c >= 0")
    return a * j + b * float(np.log2(n)) + c


@dataclass(frozen=True)
class DescriptionLengthBound:
    """Fixed coefficients for the parameter-encoding bound."""

    a: float = DL_BITS_PER_PARAM_DEFAULT
    b: float = DL_POSITION_MULTIPLIER_DEFAULT
    n: int = 1
    c: float = DL_CONSTANT_BITS_DEFAULT

    def bits(self, j: int) -> float:
        return description_length(j, self.a, self.b, self.n, self.c)
