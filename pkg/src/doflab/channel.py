"""CSIT configurations, generic channel sampling and transmitter views.

Receivers and slots are indexed from 0 throughout the Python API.
"""

from __future__ import annotations

import builtins
import json
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Sequence

import numpy as np

from .exactlin import RationalMatrix, Scalar, as_scalar, format_rational, parse_rational, rank_of_rows

DEFAULT_RANGE = 100
MAX_RESAMPLES = 1000


class CsitState(str, Enum):
    P = "P"  # instantaneous
    D = "D"  # delayed by one slot
    N = "N"  # none


@dataclass(frozen=True)
class CsitConfig:
    """Per-receiver CSIT states."""

    states: tuple[CsitState, ...]

    @classmethod
    def parse(cls, text: str | Sequence[str]) -> "CsitConfig":
        """Build a config from ``"PDD"`` or a list like ``["P", "D", "D"]``."""
        if isinstance(text, str):
            chars = [c for c in text.replace(",", " ").split()] if " " in text or "," in text else list(text)
        else:
            chars = list(text)
        chars = [c.strip().upper() for c in chars]
        if not chars:
            raise ValueError("CSIT string must name at least one receiver")
        bad = [c for c in chars if c not in ("P", "D", "N")]
        if bad:
            raise ValueError(f"invalid CSIT state(s) {bad}; use P, D or N")
        return cls(tuple(CsitState(c) for c in chars))

    @property
    def k(self) -> int:
        return len(self.states)

    def indices(self, state: CsitState) -> tuple[int, ...]:
        return tuple(j for j, s in enumerate(self.states) if s == state)

    @property
    def P(self) -> tuple[int, ...]:
        return self.indices(CsitState.P)

    @property
    def D(self) -> tuple[int, ...]:
        return self.indices(CsitState.D)

    @property
    def N(self) -> tuple[int, ...]:
        return self.indices(CsitState.N)

    def state(self, j: int) -> CsitState:
        return self.states[j]

    def permuted(self, perm: Sequence[int]) -> "CsitConfig":
        """Config whose receiver ``i`` is this config's receiver ``perm[i]``."""
        return CsitConfig(tuple(self.states[p] for p in perm))

    def __str__(self) -> str:
        return "".join(s.value for s in self.states)


@dataclass(frozen=True)
class ChannelRealization:
    """Channel rows ``g_j(t)`` stored as ``rows[t][j]`` (length-m tuples)."""

    k: int
    m: int
    n: int
    rows: tuple[tuple[tuple[Scalar, ...], ...], ...]
    seed: int | None = None
    value_range: int = DEFAULT_RANGE
    resamples: int = 0

    def __post_init__(self) -> None:
        if len(self.rows) != self.n or any(len(slot) != self.k for slot in self.rows):
            raise ValueError("rows must be indexed [slot][receiver]")
        if any(len(g) != self.m for slot in self.rows for g in slot):
            raise ValueError("every channel row needs m entries")

    def g(self, j: int, t: int) -> tuple[Scalar, ...]:
        return self.rows[t][j]

    def slot_matrix(self, t: int) -> RationalMatrix:
        return RationalMatrix(self.rows[t], cols=self.m)

    def with_rows(self, updates: dict[tuple[int, int], Sequence[Scalar]]) -> "ChannelRealization":
        """Copy with selected ``(j, t)`` rows replaced."""
        rows = [list(slot) for slot in self.rows]
        for (j, t), g in updates.items():
            rows[t][j] = tuple(as_scalar(x) for x in g)
        return ChannelRealization(
            self.k, self.m, self.n, tuple(tuple(s) for s in rows), self.seed, self.value_range, self.resamples
        )

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "n": self.n,
            "seed": self.seed,
            "range": self.value_range,
            "resamples": self.resamples,
            "entries": [
                [[format_rational(x, always_denominator=True) for x in g] for g in slot] for slot in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelRealization":
        rows = tuple(
            tuple(tuple(parse_rational(x) for x in g) for g in slot) for slot in data["entries"]
        )
        return cls(
            data["k"], data["m"], data["n"], rows, data.get("seed"),
            data.get("range", DEFAULT_RANGE), data.get("resamples", 0),
        )

    @classmethod
    def from_json(cls, text: str) -> "ChannelRealization":
        return cls.from_dict(json.loads(text))


def slot_is_generic(block: Sequence[Sequence[Scalar]], k: int, m: int) -> bool:
    """True iff every k x k minor over any k antenna columns is nonzero."""
    for cols in combinations(range(m), k):
        sub = [[row[c] for c in cols] for row in block]
        if rank_of_rows(sub, k) < k:
            return False
    return True


def sample_channel(k: int, m: int, n: int, seed: int, range: int = DEFAULT_RANGE) -> ChannelRealization:
    """Draw a generic integer channel, resampling degenerate slots.

    Entries are uniform on ``[-range, range]``. A slot is redrawn until all of
    its k x k minors are nonzero; the total number of redraws is recorded.
    """
    if k < 1 or m < k or n < 1:
        raise ValueError(f"need 1 <= k <= m and n >= 1 (got k={k}, m={m}, n={n})")
    if range < 1:
        raise ValueError("range must be positive")
    rng = np.random.default_rng(seed)
    resamples = 0
    slots = []
    for _ in builtins.range(n):
        while True:
            block = rng.integers(-range, range, size=(k, m), endpoint=True).tolist()
            if slot_is_generic(block, k, m):
                break
            resamples += 1
            if resamples > MAX_RESAMPLES:
                raise RuntimeError(
                    f"no generic channel after {MAX_RESAMPLES} resamples (k={k}, m={m}, range={range}, seed={seed})"
                )
        slots.append(tuple(tuple(int(x) for x in row) for row in block))
    return ChannelRealization(k, m, n, tuple(slots), seed, range, resamples)


def block_diagonal(realization: ChannelRealization, j: int) -> RationalMatrix:
    """The n x nm matrix whose row t holds g_j(t) in columns t*m .. t*m+m-1."""
    if not 0 <= j < realization.k:
        raise IndexError(f"receiver {j} out of range")
    n, m = realization.n, realization.m
    body = []
    for t in range(n):
        row = [0] * (n * m)
        row[t * m:(t + 1) * m] = realization.g(j, t)
        body.append(row)
    return RationalMatrix(body, cols=n * m)


class CsitVisibilityError(LookupError):
    """A generator asked for a coefficient the transmitter cannot see."""


@dataclass(frozen=True)
class CsitView:
    """What the transmitter knows when choosing the slot-``t`` precoders.

    ``history[j]`` holds receiver j's visible rows for slots 0, 1, ... in order:
    up to and including ``t`` for P receivers, up to ``t - 1`` for D receivers,
    none for N receivers.
    """

    t: int
    config: CsitConfig
    m: int
    history: tuple[tuple[tuple[Scalar, ...], ...], ...]

    def row(self, j: int, s: int) -> tuple[Scalar, ...]:
        h = self.history[j]
        if s < 0 or s >= len(h):
            raise CsitVisibilityError(
                f"g_{j}({s}) is not visible at slot {self.t} for a {self.config.state(j).value} receiver"
            )
        return h[s]

    def visible(self, j: int, s: int) -> bool:
        return 0 <= s < len(self.history[j])

    def at(self, s: int) -> "CsitView":
        """The view the transmitter had at an earlier slot ``s``."""
        if s > self.t or s < 0:
            raise ValueError(f"cannot rewind view at slot {self.t} to slot {s}")
        if s == self.t:
            return self
        cut = tuple(h[: _visible_count(self.config.state(j), s)] for j, h in enumerate(self.history))
        return CsitView(s, self.config, self.m, cut)

    def coefficients(self) -> list[tuple[int, int, int, Scalar]]:
        """Every visible scalar as ``(receiver, slot, antenna, value)``."""
        return [
            (j, s, a, x)
            for j, h in enumerate(self.history)
            for s, g in enumerate(h)
            for a, x in enumerate(g)
        ]

    def is_empty(self) -> bool:
        return not any(self.history)


def _visible_count(state: CsitState, t: int) -> int:
    if state is CsitState.P:
        return t + 1
    if state is CsitState.D:
        return t
    return 0


def csit_view(config: CsitConfig, realization: ChannelRealization, t: int) -> CsitView:
    if config.k != realization.k:
        raise ValueError("config and realization disagree on k")
    if not 0 <= t < realization.n:
        raise IndexError(f"slot {t} out of range")
    history = tuple(
        tuple(realization.g(j, s) for s in range(_visible_count(config.state(j), t)))
        for j in range(config.k)
    )
    return CsitView(t, config, realization.m, history)


def invisible_positions(config: CsitConfig, n: int, t: int) -> list[tuple[int, int]]:
    """All ``(j, s)`` whose rows are hidden from the transmitter at slot t."""
    return [
        (j, s)
        for j in range(config.k)
        for s in range(n)
        if s >= _visible_count(config.state(j), t)
    ]
