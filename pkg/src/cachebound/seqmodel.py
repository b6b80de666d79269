"""Gated autoregressive sequence model over a discrete alphabet.

The model is an embedding, one LSTM layer, and four feed-forward layers
ending in a softmax.  Every scalar parameter theta_i carries a gate
g_i = sigmoid(z_i); forward computation always uses the effective value
g_i * theta_i.  Driving gates toward zero under a penalty and then
thresholding them yields pruned models whose evaluation cost is the
number of surviving parameters.

All arithmetic is float64 and all gradients are exact (verified against
central finite differences in the test suite).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError, NumericalError

VOCAB_DEFAULT = 100
GATE_INIT = 0.95  # fresh models start effectively unpruned

CHECKPOINT_VERSION = 1


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class ModelArch:
    """Shapes of every parameter tensor, in canonical order."""

    d_in: int
    width: int
    ff_widths: tuple[int, int, int, int]
    horizon: int
    vocab: int = VOCAB_DEFAULT

    def __post_init__(self):
        if min(self.d_in, self.width, self.horizon, *self.ff_widths) < 1:
            raise ConfigError("all model dimensions must be >= 1")
        if self.ff_widths[3] != self.vocab:
            raise ConfigError(
                f"last feed-forward width must equal the alphabet size "
                f"({self.vocab}), got {self.ff_widths[3]}")

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        w, d = self.width, self.d_in
        f = self.ff_widths
        shapes: dict[str, tuple[int, ...]] = {
            "embed": (self.vocab, d),
            "lstm_wx": (d, 4 * w),
            "lstm_wh": (w, 4 * w),
            "lstm_b": (4 * w,),
        }
        fan_in = w
        for k, width in enumerate(f):
            shapes[f"ff{k}_w"] = (fan_in, width)
            shapes[f"ff{k}_b"] = (width,)
            fan_in = width
        return shapes

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.tensor_shapes().values())

    def describe(self) -> str:
        return f"w{self.width}-ff{'.'.join(str(x) for x in self.ff_widths)}"


def default_ff_widths(width: int, vocab: int = VOCAB_DEFAULT) -> tuple[int, int, int, int]:
    return (width, width, max(1, width // 2), vocab)


@dataclass
class GatedModel:
    """Trainable model: raw parameters plus per-parameter gate logits."""

    arch: ModelArch
    theta: dict[str, np.ndarray]
    z: dict[str, np.ndarray]
    seed: int

    def gates(self) -> dict[str, np.ndarray]:
        return {k: sigmoid(v) for k, v in self.z.items()}

    def effective(self) -> dict[str, np.ndarray]:
        """The weights actually used by forward passes: g * theta."""
        return {k: sigmoid(self.z[k]) * self.theta[k] for k in self.theta}

    def flat_theta(self) -> np.ndarray:
        """All raw parameters concatenated in canonical tensor order."""
        return flatten_tensors(self.theta, self.arch)

    def flat_z(self) -> np.ndarray:
        return flatten_tensors(self.z, self.arch)

    def flat_gates(self) -> np.ndarray:
        return sigmoid(self.flat_z())

    def copy(self) -> "GatedModel":
        return GatedModel(self.arch, {k: v.copy() for k, v in self.theta.items()},
                          {k: v.copy() for k, v in self.z.items()}, self.seed)


def flatten_tensors(tensors: dict[str, np.ndarray], arch: ModelArch) -> np.ndarray:
    return np.concatenate([tensors[name].ravel() for name in arch.tensor_shapes()])


@dataclass
class PrunedModel:
    """Frozen snapshot after gate thresholding.

    Gates below the threshold are zeroed and the survivors are folded
    into the weights (theta_i := g_i * theta_i), so evaluation needs no
    gate machinery.  Masked-out parameters contribute exactly 0.
    """

    arch: ModelArch
    weights: dict[str, np.ndarray]
    mask: dict[str, np.ndarray]
    g_min: float
    seed: int

    def effective(self) -> dict[str, np.ndarray]:
        return self.weights


Model = GatedModel | PrunedModel


def init_model(d_in: int, width: int, ff_widths=None, horizon: int = 16,
               seed: int = 0, vocab: int = VOCAB_DEFAULT) -> GatedModel:
    """Deterministically initialize a model from a seed.

    Weights and biases draw from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
    per tensor, in canonical tensor order; gate logits start at
    logit(0.95) so a fresh model is effectively unpruned.
    """
    if ff_widths is None:
        ff_widths = default_ff_widths(width, vocab)
    arch = ModelArch(d_in=d_in, width=width, ff_widths=tuple(int(x) for x in ff_widths),
                     horizon=horizon, vocab=vocab)
    rng = np.random.default_rng(np.uint64(seed))
    theta: dict[str, np.ndarray] = {}
    z0 = float(np.log(GATE_INIT / (1.0 - GATE_INIT)))
    z: dict[str, np.ndarray] = {}
    for name, shape in arch.tensor_shapes().items():
        fan_in = shape[0] if len(shape) > 1 else max(1, arch.width)
        if name == "embed":
            fan_in = arch.d_in
        elif name == "lstm_b":
            fan_in = arch.width
        elif name.endswith("_b"):
            fan_in = arch.tensor_shapes()[name.replace("_b", "_w")][0]
        scale = 1.0 / np.sqrt(fan_in)
        theta[name] = rng.uniform(-scale, scale, size=shape)
        z[name] = np.full(shape, z0, dtype=np.float64)
    return GatedModel(arch=arch, theta=theta, z=z, seed=seed)


# ---------------------------------------------------------------------------
# Forward / evaluation
# ---------------------------------------------------------------------------

def _check_symbols(symbols: np.ndarray, vocab: int) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size and not (0 <= symbols.min() and symbols.max() < vocab):
        raise InputError(f"symbol out of range [0, {vocab})")
    return symbols


def _lstm_step(weights, x_emb, h, c):
    """One LSTM step on a (B, d_in) input slice."""
    w = h.shape[1]
    pre = x_emb @ weights["lstm_wx"] + h @ weights["lstm_wh"] + weights["lstm_b"]
    i = sigmoid(pre[:, :w])
    f = sigmoid(pre[:, w:2 * w])
    cand = np.tanh(pre[:, 2 * w:3 * w])
    o = sigmoid(pre[:, 3 * w:])
    c_new = f * c + i * cand
    tc = np.tanh(c_new)
    h_new = o * tc
    return i, f, cand, o, c_new, tc, h_new


def _head_logits(weights, h):
    """The four feed-forward layers; tanh between layers, linear output."""
    a = h
    for k in range(3):
        a = np.tanh(a @ weights[f"ff{k}_w"] + weights[f"ff{k}_b"])
    return a @ weights["ff3_w"] + weights["ff3_b"]


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def zero_state(arch: ModelArch, batch: int = 1) -> tuple[np.ndarray, np.ndarray]:
    return (np.zeros((batch, arch.width)), np.zeros((batch, arch.width)))


def forward(model: Model, context, initial_state=None):
    """Distribution over the next symbol after consuming `context`.

    Returns (probabilities, final_state).  The context must hold between
    1 and `horizon` symbols; recurrent state can be threaded through
    repeated calls via `initial_state`.
    """
    arch = model.arch
    context = _check_symbols(context, arch.vocab)
    if not 1 <= len(context) <= arch.horizon:
        raise InputError(f"context length must be in [1, {arch.horizon}], got {len(context)}")
    weights = model.effective()
    h, c = initial_state if initial_state is not None else zero_state(arch)
    for t in range(len(context)):
        x_emb = weights["embed"][context[t:t + 1]]
        *_, c, _, h = _lstm_step(weights, x_emb, h, c)
    logits = _head_logits(weights, h)
    probs = np.exp(_log_softmax(logits))[0]
    return probs, (h, c)


def _sequence_logprobs(weights, arch, symbols: np.ndarray) -> np.ndarray:
    """Log-probability of each symbol given its exact full prefix.

    Returns an array aligned with `symbols`; index 0 is NaN because the
    first symbol has no context.
    """
    n = len(symbols)
    out = np.full(n, np.nan)
    h, c = zero_state(arch)
    for t in range(n - 1):
        x_emb = weights["embed"][symbols[t:t + 1]]
        *_, c, _, h = _lstm_step(weights, x_emb, h, c)
        logp = _log_softmax(_head_logits(weights, h))
        out[t + 1] = logp[0, symbols[t + 1]]
    return out


def per_step_loglik(model: Model, sequence) -> np.ndarray:
    """Per-step log-likelihood series for one contiguous sequence."""
    symbols = _check_symbols(sequence, model.arch.vocab)
    return _sequence_logprobs(model.effective(), model.arch, symbols)


def nll(model: Model, sequence) -> float:
    """Negative log likelihood of a sequence (natural log, exact state).

    Sums -log p(x_i | x_1..x_{i-1}) over i = 2..N.
    """
    symbols = _check_symbols(sequence, model.arch.vocab)
    if len(symbols) < 2:
        raise InputError(f"need at least 2 symbols to score, got {len(symbols)}")
    logprobs = _sequence_logprobs(model.effective(), model.arch, symbols)
    return float(-np.nansum(logprobs))


def sequences_nll(model: Model, sequences: list) -> tuple[float, int]:
    """Total NLL over independent sequences (state reset per sequence).

    Sequences are scored in one padded batch; returns (total_nll,
    total_symbols) where total_symbols counts every symbol, scored or
    not, matching length-based normalization.
    """
    arch = model.arch
    weights = model.effective()
    seqs = [_check_symbols(s, arch.vocab) for s in sequences]
    if not seqs:
        return 0.0, 0
    total_symbols = sum(len(s) for s in seqs)
    scored = [s for s in seqs if len(s) >= 2]
    if not scored:
        return 0.0, total_symbols
    b = len(scored)
    t_max = max(len(s) for s in scored)
    batch = np.zeros((b, t_max), dtype=np.int64)
    lengths = np.array([len(s) for s in scored])
    for k, s in enumerate(scored):
        batch[k, :len(s)] = s
    h, c = zero_state(arch, batch=b)
    total = 0.0
    for t in range(t_max - 1):
        x_emb = weights["embed"][batch[:, t]]
        *_, c, _, h = _lstm_step(weights, x_emb, h, c)
        active = lengths > t + 1
        if not active.any():
            break
        logp = _log_softmax(_head_logits(weights, h[active]))
        targets = batch[active, t + 1]
        total -= logp[np.arange(len(targets)), targets].sum()
    return float(total), total_symbols


# ---------------------------------------------------------------------------
# Training objective: value and exact gradient
# ---------------------------------------------------------------------------

def _as_windows(batch, horizon: int, vocab: int) -> np.ndarray:
    windows = np.asarray(batch, dtype=np.int64)
    if windows.ndim == 1:
        windows = windows[None, :]
    if windows.ndim != 2 or windows.shape[1] < 2:
        raise InputError("batch must be (B, L+1) with L >= 1")
    if windows.shape[1] - 1 > horizon:
        raise InputError(f"window length {windows.shape[1] - 1} exceeds horizon {horizon}")
    _check_symbols(windows, vocab)
    return windows


def gate_penalty(model: GatedModel) -> float:
    """Sum of all gates: the smooth surrogate for the nonzero count."""
    return float(sum(sigmoid(v).sum() for v in model.z.values()))


def objective_value(model: GatedModel, batch, beta: float) -> float:
    """Mean per-step NLL over the batch plus beta * sum of gates."""
    windows = _as_windows(batch, model.arch.horizon, model.arch.vocab)
    weights = model.effective()
    arch = model.arch
    b, lp1 = windows.shape
    steps = lp1 - 1
    h, c = zero_state(arch, batch=b)
    total = 0.0
    for t in range(steps):
        x_emb = weights["embed"][windows[:, t]]
        *_, c, _, h = _lstm_step(weights, x_emb, h, c)
        logp = _log_softmax(_head_logits(weights, h))
        total -= logp[np.arange(b), windows[:, t + 1]].sum()
    return total / (b * steps) + beta * gate_penalty(model)


def objective_grad(model: GatedModel, batch, beta: float):
    """Exact gradient of the training objective over (theta, z).

    Backpropagation runs through the whole window (length <= horizon).
    Returns (grad_theta, grad_z, objective_value).
    """
    if beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    arch = model.arch
    windows = _as_windows(batch, arch.horizon, arch.vocab)
    weights = model.effective()
    b, lp1 = windows.shape
    steps = lp1 - 1
    w = arch.width
    inputs = windows[:, :steps]
    targets = windows[:, 1:]

    # Forward with caches.
    x_emb = weights["embed"][inputs]  # (B, L, d_in)
    i_all = np.empty((b, steps, w)); f_all = np.empty((b, steps, w))
    cand_all = np.empty((b, steps, w)); o_all = np.empty((b, steps, w))
    cprev_all = np.empty((b, steps, w)); tc_all = np.empty((b, steps, w))
    hprev_all = np.empty((b, steps, w)); hs = np.empty((b, steps, w))
    h, c = zero_state(arch, batch=b)
    for t in range(steps):
        hprev_all[:, t] = h
        cprev_all[:, t] = c
        i, f, cand, o, c, tc, h = _lstm_step(weights, x_emb[:, t], h, c)
        i_all[:, t] = i; f_all[:, t] = f; cand_all[:, t] = cand
        o_all[:, t] = o; tc_all[:, t] = tc; hs[:, t] = h

    hs_flat = hs.reshape(b * steps, w)
    acts = [hs_flat]
    a = hs_flat
    for k in range(3):
        a = np.tanh(a @ weights[f"ff{k}_w"] + weights[f"ff{k}_b"])
        acts.append(a)
    logits = a @ weights["ff3_w"] + weights["ff3_b"]
    logp = _log_softmax(logits)
    n_terms = b * steps
    tgt_flat = targets.reshape(-1)
    mean_nll = float(-logp[np.arange(n_terms), tgt_flat].sum() / n_terms)

    # Backward through the head.
    d_eff = {k: np.zeros_like(v) for k, v in weights.items()}
    dlogits = np.exp(logp)
    dlogits[np.arange(n_terms), tgt_flat] -= 1.0
    dlogits /= n_terms
    d_eff["ff3_w"] = acts[3].T @ dlogits
    d_eff["ff3_b"] = dlogits.sum(axis=0)
    da = dlogits @ weights["ff3_w"].T
    for k in range(2, -1, -1):
        du = da * (1.0 - acts[k + 1] ** 2)
        d_eff[f"ff{k}_w"] = acts[k].T @ du
        d_eff[f"ff{k}_b"] = du.sum(axis=0)
        da = du @ weights[f"ff{k}_w"].T
    dh_head = da.reshape(b, steps, w)

    # Backpropagation through time.
    dx = np.empty((b, steps, arch.d_in))
    dh_next = np.zeros((b, w))
    dc_next = np.zeros((b, w))
    for t in range(steps - 1, -1, -1):
        dh = dh_head[:, t] + dh_next
        i, f, cand, o = i_all[:, t], f_all[:, t], cand_all[:, t], o_all[:, t]
        tc = tc_all[:, t]
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc ** 2)
        dpre = np.concatenate([
            (dc * cand) * i * (1.0 - i),
            (dc * cprev_all[:, t]) * f * (1.0 - f),
            (dc * i) * (1.0 - cand ** 2),
            do * o * (1.0 - o),
        ], axis=1)
        d_eff["lstm_wx"] += x_emb[:, t].T @ dpre
        d_eff["lstm_wh"] += hprev_all[:, t].T @ dpre
        d_eff["lstm_b"] += dpre.sum(axis=0)
        dx[:, t] = dpre @ weights["lstm_wx"].T
        dh_next = dpre @ weights["lstm_wh"].T
        dc_next = dc * f

    np.add.at(d_eff["embed"], inputs.reshape(-1), dx.reshape(-1, arch.d_in))

    # Chain rule from effective weights back to (theta, z), plus the
    # gate-penalty term which touches z only.
    grad_theta: dict[str, np.ndarray] = {}
    grad_z: dict[str, np.ndarray] = {}
    penalty = 0.0
    for name in weights:
        g = sigmoid(model.z[name])
        gg = g * (1.0 - g)
        grad_theta[name] = g * d_eff[name]
        grad_z[name] = model.theta[name] * gg * d_eff[name] + beta * gg
        penalty += float(g.sum())

    for name in grad_theta:
        if not (np.isfinite(grad_theta[name]).all() and np.isfinite(grad_z[name]).all()):
            raise NumericalError(f"non-finite gradient in tensor {name!r}")
    return grad_theta, grad_z, mean_nll + beta * penalty


# ---------------------------------------------------------------------------
# Cost and pruning
# ---------------------------------------------------------------------------

def cost_j(model: Model) -> int:
    """Number of nonzero effective parameters (mask count when pruned)."""
    if isinstance(model, PrunedModel):
        return int(sum(int(m.sum()) for m in model.mask.values()))
    return int(sum(int(np.count_nonzero(v)) for v in model.effective().values()))


def apply_threshold(model: GatedModel, g_min: float) -> PrunedModel:
    """Zero every gate strictly below g_min and fold survivors into theta.

    The input model is left untouched.
    """
    if not 0.0 < g_min <= 1.0:
        raise ConfigError(f"g_min must be in (0, 1], got {g_min}")
    weights: dict[str, np.ndarray] = {}
    mask: dict[str, np.ndarray] = {}
    for name, theta in model.theta.items():
        g = sigmoid(model.z[name])
        keep = g >= g_min
        weights[name] = np.where(keep, g * theta, 0.0)
        mask[name] = keep
    return PrunedModel(arch=model.arch, weights=weights, mask=mask,
                       g_min=g_min, seed=model.seed)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_model(model: GatedModel, path: str) -> None:
    """Write a checkpoint; theta and z round-trip bit-exactly."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "d_in": model.arch.d_in,
        "width": model.arch.width,
        "ff_widths": list(model.arch.ff_widths),
        "horizon": model.arch.horizon,
        "vocab": model.arch.vocab,
        "seed": model.seed,
    }
    arrays = {f"theta_{k}": v for k, v in model.theta.items()}
    arrays.update({f"z_{k}": v for k, v in model.z.items()})
    np.savez_compressed(path, meta=json.dumps(meta), **arrays)


def load_model(path: str) -> GatedModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise InputError(f"unsupported checkpoint version in {path}")
        arch = ModelArch(d_in=meta["d_in"], width=meta["width"],
                         ff_widths=tuple(meta["ff_widths"]),
                         horizon=meta["horizon"], vocab=meta["vocab"])
        theta = {k[len("theta_"):]: data[k] for k in data.files if k.startswith("theta_")}
        z = {k[len("z_"):]: data[k] for k in data.files if k.startswith("z_")}
    expected = set(arch.tensor_shapes())
    if set(theta) != expected or set(z) != expected:
        raise InputError(f"checkpoint {path} does not match its architecture descriptor")
    return GatedModel(arch=arch, theta=theta, z=z, seed=meta["seed"])
