"""Memory access traces: Lackey-format parsing and synthetic generation.

A trace is an ordered stream of instruction fetches and data accesses
(loads, stores, modifies).  Traces come from two places: text files in
the format emitted by valgrind's Lackey tool, or synthetic generators
with controllable phase structure for desk-scale experiments.
"""

from __future__ import annotations

import gzip
import io
import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, ParseError

LINE_SIZE_DEFAULT = 64
DATA_ACCESS_SIZE = 8
INSTR_REGION_BASE = 0x400000
INSTR_REGION_SLOTS = 4096


class AccessKind(IntEnum):
    INSTR_FETCH = 0
    LOAD = 1
    STORE = 2
    MODIFY = 3


_KIND_OF_CHAR = {
    "I": AccessKind.INSTR_FETCH,
    "L": AccessKind.LOAD,
    "S": AccessKind.STORE,
    "M": AccessKind.MODIFY,
}
_CHAR_OF_KIND = {v: k for k, v in _KIND_OF_CHAR.items()}

# A recognized record is "[IMLS] <hex-address>,<size>" with optional
# leading whitespace; instruction lines may start at column zero.
_RECORD_RE = re.compile(r"^\s*([IMLS])\s+(\S+)\s*$")
_PAYLOAD_RE = re.compile(r"^([0-9a-fA-F]+),(\d+)$")

_ADDRESS_MAX = 2**64 - 1


@dataclass(frozen=True)
class AccessEvent:
    """One trace record: what kind of access, where, how many bytes."""

    kind: AccessKind
    address: int
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"access size must be >= 1, got {self.size}")
        if not 0 <= self.address <= _ADDRESS_MAX:
            raise ValueError(f"address does not fit in 64 bits: {self.address:#x}")


@dataclass
class AccessTrace:
    """An ordered sequence of access events, stored as parallel arrays.

    Iteration order is program order.  ``skipped_lines`` counts input
    lines that did not match the record format (banners, summaries).
    """

    kinds: np.ndarray  # uint8, AccessKind codes
    addresses: np.ndarray  # uint64
    sizes: np.ndarray  # uint64
    source_id: str = ""
    skipped_lines: int = 0

    def __post_init__(self):
        self.kinds = np.asarray(self.kinds, dtype=np.uint8)
        self.addresses = np.asarray(self.addresses, dtype=np.uint64)
        self.sizes = np.asarray(self.sizes, dtype=np.uint64)
        if not (len(self.kinds) == len(self.addresses) == len(self.sizes)):
            raise ValueError("kinds/addresses/sizes must have equal length")

    @classmethod
    def from_events(cls, events: Iterable[AccessEvent], source_id: str = "",
                    skipped_lines: int = 0) -> "AccessTrace":
        events = list(events)
        return cls(
            kinds=np.array([e.kind for e in events], dtype=np.uint8),
            addresses=np.array([e.address for e in events], dtype=np.uint64),
            sizes=np.array([e.size for e in events], dtype=np.uint64),
            source_id=source_id,
            skipped_lines=skipped_lines,
        )

    def __len__(self) -> int:
        return len(self.kinds)

    def __getitem__(self, i: int) -> AccessEvent:
        return AccessEvent(AccessKind(int(self.kinds[i])),
                           int(self.addresses[i]), int(self.sizes[i]))

    def __iter__(self) -> Iterator[AccessEvent]:
        for i in range(len(self)):
            yield self[i]

    @property
    def instruction_count(self) -> int:
        return int(np.count_nonzero(self.kinds == AccessKind.INSTR_FETCH))

    @property
    def data_mask(self) -> np.ndarray:
        return self.kinds != AccessKind.INSTR_FETCH

    @property
    def data_access_count(self) -> int:
        return int(np.count_nonzero(self.data_mask))


def parse_lackey(stream: Iterable[str], source_id: str = "") -> AccessTrace:
    """Parse Lackey text output into an AccessTrace.

    Recognized lines look like ``I  0400d7d4,8`` or `` L 04f2b0a0,8``.
    Lines that do not start with an I/M/L/S record marker are skipped
    and counted.  A line that *does* carry a record marker but has a
    malformed address or size raises :class:`ParseError` with its line
    number.  Empty input yields an empty trace.
    """
    kinds: list[int] = []
    addresses: list[int] = []
    sizes: list[int] = []
    skipped = 0
    for lineno, line in enumerate(stream, start=1):
        m = _RECORD_RE.match(line)
        if m is None:
            if line.strip():
                skipped += 1
            continue
        kind_char, payload = m.group(1), m.group(2)
        pm = _PAYLOAD_RE.match(payload)
        if pm is None:
            raise ParseError(f"malformed record payload {payload!r}", lineno)
        address = int(pm.group(1), 16)
        if address > _ADDRESS_MAX:
            raise ParseError(f"address does not fit in 64 bits: {pm.group(1)}", lineno)
        size = int(pm.group(2))
        if size < 1:
            raise ParseError(f"access size must be >= 1, got {size}", lineno)
        kinds.append(_KIND_OF_CHAR[kind_char])
        addresses.append(address)
        sizes.append(size)
    return AccessTrace(
        kinds=np.array(kinds, dtype=np.uint8),
        addresses=np.array(addresses, dtype=np.uint64),
        sizes=np.array(sizes, dtype=np.uint64),
        source_id=source_id,
        skipped_lines=skipped,
    )


def format_lackey_line(event: AccessEvent) -> str:
    """Render one event in canonical Lackey form (8-digit padded hex)."""
    if event.kind == AccessKind.INSTR_FETCH:
        return f"I  {event.address:08x},{event.size}"
    return f" {_CHAR_OF_KIND[event.kind]} {event.address:08x},{event.size}"


def serialize_lackey(trace: AccessTrace) -> str:
    """Render a whole trace as Lackey text; inverse of parse_lackey."""
    return "".join(format_lackey_line(e) + "\n" for e in trace)


def load_trace(path: str, source_id: str | None = None) -> AccessTrace:
    """Read a Lackey trace file, transparently decompressing gzip."""
    with open(path, "rb") as raw:
        magic = raw.read(2)
    opener = gzip.open if magic == b"\x1f\x8b" else open
    with opener(path, "rt", encoding="utf-8") as fh:  # type: ignore[call-overload]
        return parse_lackey(fh, source_id=source_id if source_id is not None else path)


# ---------------------------------------------------------------------------
# Synthetic generators
# ---------------------------------------------------------------------------

SYNTHETIC_KINDS = ("constant_loop", "periodic_phases", "random_walk")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _interleave(data_addresses: np.ndarray, data_kinds: np.ndarray,
                instructions_per_access: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Put `instructions_per_access` fetches in front of every data access."""
    n = len(data_addresses)
    r = instructions_per_access
    total = n * (r + 1)
    kinds = np.empty(total, dtype=np.uint8)
    addresses = np.empty(total, dtype=np.uint64)
    sizes = np.full(total, DATA_ACCESS_SIZE, dtype=np.uint64)

    block = np.arange(total) % (r + 1)
    is_data = block == r
    kinds[is_data] = data_kinds
    kinds[~is_data] = AccessKind.INSTR_FETCH
    addresses[is_data] = data_addresses
    n_instr = total - n
    instr_slots = (np.arange(n_instr) % INSTR_REGION_SLOTS) * 4 + INSTR_REGION_BASE
    addresses[~is_data] = instr_slots.astype(np.uint64)
    sizes[~is_data] = 4
    return kinds, addresses, sizes


def constant_loop(lines: int, iterations: int, *, instructions_per_access: int = 4,
                  line_stride: int = LINE_SIZE_DEFAULT, seed: int = 0) -> AccessTrace:
    """A single working set of `lines` cache lines, looped `iterations` times.

    Identical for any seed: the pattern is fully determined by its shape.
    """
    _require(lines >= 1, f"constant_loop: lines must be >= 1, got {lines}")
    _require(iterations >= 1, f"constant_loop: iterations must be >= 1, got {iterations}")
    _require(instructions_per_access >= 0, "instructions_per_access must be >= 0")
    line_idx = np.tile(np.arange(lines, dtype=np.uint64), iterations)
    data_addr = line_idx * np.uint64(line_stride)
    data_kinds = np.full(len(data_addr), AccessKind.LOAD, dtype=np.uint8)
    kinds, addresses, sizes = _interleave(data_addr, data_kinds, instructions_per_access)
    return AccessTrace(kinds, addresses, sizes,
                       source_id=f"constant_loop(lines={lines},iterations={iterations})")


def periodic_phases(phases: list[dict], phase_length: int, cycles: int, *,
                    instructions_per_access: int = 4,
                    line_stride: int = LINE_SIZE_DEFAULT, seed: int = 0) -> AccessTrace:
    """Cycle through phases with distinct working-set sizes.

    Each phase is a dict ``{"lines": n}``; during its turn the generator
    loops over a dedicated region of `n` cache lines for `phase_length`
    data accesses.  Regions are disjoint so switching phases changes the
    live working set.
    """
    _require(len(phases) >= 1, "periodic_phases: need at least one phase")
    _require(phase_length >= 1, f"phase_length must be >= 1, got {phase_length}")
    _require(cycles >= 1, f"cycles must be >= 1, got {cycles}")
    _require(instructions_per_access >= 0, "instructions_per_access must be >= 0")
    widths = []
    for p, spec in enumerate(phases):
        _require(isinstance(spec, dict) and "lines" in spec,
                 f"phase {p}: expected a dict with a 'lines' key")
        w = int(spec["lines"])
        _require(w >= 1, f"phase {p}: working set must be >= 1 line, got {w}")
        widths.append(w)

    offset = np.arange(phase_length, dtype=np.uint64)
    pieces = []
    for p, w in enumerate(widths):
        base = np.uint64(p) << np.uint64(32)
        pieces.append((base + (offset % np.uint64(w))) * np.uint64(line_stride))
    data_addr = np.concatenate(pieces * cycles)
    data_kinds = np.full(len(data_addr), AccessKind.LOAD, dtype=np.uint8)
    kinds, addresses, sizes = _interleave(data_addr, data_kinds, instructions_per_access)
    desc = ".".join(str(w) for w in widths)
    return AccessTrace(kinds, addresses, sizes,
                       source_id=f"periodic_phases(lines={desc},len={phase_length},cycles={cycles})")


def random_walk(span: int, accesses: int, *, spread: int | None = None,
                drift: int | None = None, instructions_per_access: int = 4,
                line_stride: int = LINE_SIZE_DEFAULT, seed: int = 0) -> AccessTrace:
    """Addresses drawn from a drifting distribution with no long-term period.

    The distribution's center performs an integer random walk over `span`
    cache lines (wrapping) while its half-width wanders between 1 and
    `spread` lines on a slow reflected log-scale walk, so the live
    working-set size (and hence the miss rate) varies aperiodically.
    """
    _require(span >= 1, f"random_walk: span must be >= 1, got {span}")
    _require(accesses >= 1, f"random_walk: accesses must be >= 1, got {accesses}")
    _require(instructions_per_access >= 0, "instructions_per_access must be >= 0")
    if spread is None:
        spread = max(2, span // 16)
    if drift is None:
        drift = max(1, span // 1024)
    _require(spread >= 1 and drift >= 0, "need spread >= 1 and drift >= 0")

    rng = np.random.default_rng(np.uint64(seed))
    steps = rng.integers(-drift, drift + 1, size=accesses)
    centers = span // 2 + np.cumsum(steps)
    # width walk, reflected into [0, log(spread)]
    hi = np.log(max(2.0, float(spread)))
    walk = hi / 2.0 + np.cumsum(rng.uniform(-0.08, 0.08, size=accesses))
    folded = np.mod(walk, 2.0 * hi)
    half_width = np.exp(np.where(folded < hi, folded, 2.0 * hi - folded))
    jitter = np.round(rng.uniform(-1.0, 1.0, size=accesses) * half_width).astype(np.int64)
    line_idx = np.mod(centers + jitter, span).astype(np.uint64)
    data_addr = line_idx * np.uint64(line_stride)
    data_kinds = np.full(len(data_addr), AccessKind.LOAD, dtype=np.uint8)
    kinds, addresses, sizes = _interleave(data_addr, data_kinds, instructions_per_access)
    return AccessTrace(kinds, addresses, sizes,
                       source_id=f"random_walk(span={span},n={accesses},seed={seed})")


_GENERATORS = {
    "constant_loop": constant_loop,
    "periodic_phases": periodic_phases,
    "random_walk": random_walk,
}


def validate_synthetic_params(kind: str, params: dict) -> None:
    """Reject unknown or missing generator parameters without generating."""
    import inspect

    if kind not in _GENERATORS:
        raise ConfigError(f"unknown synthetic trace kind {kind!r}; "
                          f"expected one of {SYNTHETIC_KINDS}")
    sig = inspect.signature(_GENERATORS[kind])
    allowed = set(sig.parameters) - {"seed"}
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"unknown {kind} parameters: {sorted(unknown)} "
                          f"(accepted: {sorted(allowed)})")
    missing = [name for name, p in sig.parameters.items()
               if p.default is inspect.Parameter.empty and name not in params]
    if missing:
        raise ConfigError(f"{kind} requires parameters: {missing}")


def generate_synthetic(kind: str, params: dict, seed: int = 0) -> AccessTrace:
    """Dispatch to a synthetic generator by kind name.

    Pure function of (kind, params, seed): two calls with the same
    arguments produce identical event sequences.
    """
    validate_synthetic_params(kind, params)
    return _GENERATORS[kind](**params, seed=seed)
