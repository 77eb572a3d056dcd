"""Linear precoding strategies, transcripts and the rank-based decodability test."""

from __future__ import annotations

import json
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .channel import (
    ChannelRealization,
    CsitConfig,
    CsitState,
    CsitView,
    csit_view,
    invisible_positions,
)
from .exactlin import (
    RationalMatrix,
    Scalar,
    as_scalar,
    orthogonal_complement,
    rank_of_rows,
    vstack,
)

KINDS = ("oblivious", "delayed-mixing", "zero-forcing-hybrid")
PRECODER_RANGE = 9


class NonReproducibleGeneratorError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearStrategy:
    """Per-slot precoders ``precoders[t][j]`` of shape m x symbols[j]."""

    k: int
    m: int
    n: int
    symbols: tuple[int, ...]
    precoders: tuple[tuple[RationalMatrix, ...], ...]
    tag: str = ""
    config: CsitConfig | None = None

    def __post_init__(self) -> None:
        if len(self.symbols) != self.k or any(s < 0 for s in self.symbols):
            raise ValueError("need one nonnegative symbol count per receiver")
        if len(self.precoders) != self.n:
            raise ValueError("need precoders for every slot")
        for t, slot in enumerate(self.precoders):
            if len(slot) != self.k:
                raise ValueError(f"slot {t}: need one precoder per receiver")
            for j, V in enumerate(slot):
                if V.shape != (self.m, self.symbols[j]):
                    raise ValueError(f"V_{j}({t}) has shape {V.shape}, expected {(self.m, self.symbols[j])}")
        if self.config is not None and self.config.k != self.k:
            raise ValueError("config size differs from k")

    @classmethod
    def zero(cls, k: int, m: int, n: int, symbols: Sequence[int] | None = None,
             config: CsitConfig | None = None) -> "LinearStrategy":
        symbols = tuple(symbols) if symbols is not None else (0,) * k
        slot = tuple(RationalMatrix.zeros(m, s) for s in symbols)
        return cls(k, m, n, symbols, (slot,) * n, "zero", config)

    def precoder(self, j: int, t: int) -> RationalMatrix:
        return self.precoders[t][j]


class Policy(ABC):
    """A precoding rule that sees the channel only through a :class:`CsitView`."""

    tag: str = "policy"

    def __init__(self, k: int, m: int, n: int, symbols: Sequence[int]):
        self.k, self.m, self.n = k, m, n
        self.symbols = tuple(symbols)

    @abstractmethod
    def precoders(self, view: CsitView) -> tuple[RationalMatrix, ...]:
        """Return ``(V_0(t), ..., V_{k-1}(t))`` for ``t = view.t``."""


def realize(policy: Policy, config: CsitConfig, realization: ChannelRealization) -> LinearStrategy:
    """Run a policy slot by slot over a channel realization."""
    if (policy.k, policy.m, policy.n) != (realization.k, realization.m, realization.n):
        raise ValueError("policy and realization dimensions differ")
    slots = tuple(policy.precoders(csit_view(config, realization, t)) for t in range(realization.n))
    return LinearStrategy(policy.k, policy.m, policy.n, policy.symbols, slots, policy.tag, config)


def _row_times(g: Sequence[Scalar], V: RationalMatrix) -> tuple[Scalar, ...]:
    """Row vector g @ V."""
    cols = V.cols
    out = [0] * cols
    for a, vrow in zip(g, V.row_tuples()):
        if a:
            for c in range(cols):
                x = vrow[c]
                if x:
                    out[c] += a * x
    return tuple(as_scalar(x) for x in out)


class Transcript:
    """A strategy evaluated on a channel; received matrices are memoized."""

    def __init__(self, strategy: LinearStrategy, realization: ChannelRealization):
        if (strategy.k, strategy.m, strategy.n) != (realization.k, realization.m, realization.n):
            raise ValueError("strategy and realization dimensions differ")
        self.strategy = strategy
        self.realization = realization
        self.config = strategy.config
        m, n = strategy.m, strategy.n
        self.stacked = tuple(
            vstack(*(strategy.precoders[t][j] for t in range(n))) if n else RationalMatrix.zeros(0, strategy.symbols[j])
            for j in range(strategy.k)
        )
        # rows of G_j^n V_i^n for each (j, i), computed slot by slot
        self._blocks = {
            (j, i): tuple(_row_times(realization.g(j, t), strategy.precoders[t][i]) for t in range(n))
            for j in range(strategy.k)
            for i in range(strategy.k)
        }
        self._lock = threading.Lock()
        self._received: dict[tuple[int, tuple[int, ...]], RationalMatrix] = {}
        self._ranks: dict[tuple[tuple[int, ...], tuple[int, ...]], int] = {}
        assert all(V.shape == (n * m, s) for V, s in zip(self.stacked, strategy.symbols))

    @property
    def k(self) -> int:
        return self.strategy.k

    @property
    def n(self) -> int:
        return self.strategy.n

    @property
    def symbols(self) -> tuple[int, ...]:
        return self.strategy.symbols

    def row_block(self, j: int, S: Iterable[int]) -> list[tuple[Scalar, ...]]:
        """Rows of G_j^n [V_i^n for i in sorted S] as plain tuples."""
        order = sorted(set(S))
        return [sum((self._blocks[(j, i)][t] for i in order), ()) for t in range(self.n)]

    def received(self, j: int, S: Iterable[int]) -> RationalMatrix:
        key = (j, tuple(sorted(set(S))))
        with self._lock:
            hit = self._received.get(key)
        if hit is None:
            cols = sum(self.symbols[i] for i in key[1])
            hit = RationalMatrix(self.row_block(j, key[1]), cols=cols)
            with self._lock:
                self._received[key] = hit
        return hit

    def stacked_rank(self, receivers: Iterable[int], S: Iterable[int]) -> int:
        """rank of [G_a; G_b; ...][V_i for i in S] for the listed receivers."""
        rkey = tuple(sorted(set(receivers)))
        skey = tuple(sorted(set(S)))
        with self._lock:
            hit = self._ranks.get((rkey, skey))
        if hit is None:
            cols = sum(self.symbols[i] for i in skey)
            rows = [r for j in rkey for r in self.row_block(j, skey)]
            hit = rank_of_rows(rows, cols)
            with self._lock:
                self._ranks[(rkey, skey)] = hit
        return hit

    def rank(self, j: int, S: Iterable[int]) -> int:
        return self.stacked_rank((j,), S)

    def to_dict(self, include_matrices: bool = False) -> dict:
        out = {
            "strategy": self.strategy.tag,
            "config": str(self.config) if self.config else None,
            "seed": self.realization.seed,
            "k": self.k,
            "m": self.strategy.m,
            "n": self.n,
            "symbols": list(self.symbols),
            "decodability": [r.to_dict() for r in check_decodability(self)],
        }
        if include_matrices:
            out["channel"] = self.realization.to_dict()
            out["precoders"] = [[V.to_strings() for V in slot] for slot in self.strategy.precoders]
        return out

    def to_json(self, include_matrices: bool = False) -> str:
        return json.dumps(self.to_dict(include_matrices), sort_keys=True)


def assemble(strategy: LinearStrategy, realization: ChannelRealization) -> Transcript:
    return Transcript(strategy, realization)


def received(transcript: Transcript, j: int, S: Iterable[int]) -> RationalMatrix:
    """G_j^n times the side-by-side precoders of the receivers in S."""
    return transcript.received(j, S)


@dataclass(frozen=True)
class DecodabilityRecord:
    receiver: int
    symbols: int
    lhs_rank: int
    interference_rank: int
    own_rank: int

    @property
    def achieved(self) -> bool:
        return self.lhs_rank - self.interference_rank == self.own_rank == self.symbols

    @property
    def clean_dims(self) -> int:
        """Interference-free dimensions, lhs - interference."""
        return self.lhs_rank - self.interference_rank

    def to_dict(self) -> dict:
        return {
            "receiver": self.receiver,
            "achieved": self.achieved,
            "symbols": self.symbols,
            "lhsRank": self.lhs_rank,
            "interferenceRank": self.interference_rank,
            "ownRank": self.own_rank,
        }


def check_decodability(transcript: Transcript) -> tuple[DecodabilityRecord, ...]:
    k = transcript.k
    out = []
    for j in range(k):
        others = [i for i in range(k) if i != j]
        out.append(
            DecodabilityRecord(
                receiver=j,
                symbols=transcript.symbols[j],
                lhs_rank=transcript.rank(j, range(k)),
                interference_rank=transcript.rank(j, others),
                own_rank=transcript.rank(j, [j]),
            )
        )
    return tuple(out)


def is_decodable(transcript: Transcript) -> bool:
    return all(r.achieved for r in check_decodability(transcript))


PolicyFactory = Callable[[ChannelRealization, int], Policy]


def validate_csit_compliance(
    factory: PolicyFactory,
    config: CsitConfig,
    realization: ChannelRealization,
    seed: int,
    trials: int = 10,
) -> bool:
    """Replay audit of the CSIT constraint.

    ``factory(realization, seed)`` must build the policy. For every slot t and
    every trial, all coefficients hidden at t are redrawn and the slot-t
    precoders are recomputed; any change means the policy peeked.

    Raises:
        NonReproducibleGeneratorError: if two runs on identical inputs differ.
    """
    reference = realize(factory(realization, seed), config, realization)
    again = realize(factory(realization, seed), config, realization)
    if reference != again:
        raise NonReproducibleGeneratorError("non-reproducible generator")
    rng = np.random.default_rng([abs(seed), 0xC5])
    lo, hi = -realization.value_range, realization.value_range
    for _ in range(trials):
        for t in range(realization.n):
            hidden = invisible_positions(config, realization.n, t)
            updates = {
                pos: tuple(int(x) for x in rng.integers(lo, hi, size=realization.m, endpoint=True))
                for pos in hidden
            }
            perturbed = realization.with_rows(updates)
            try:
                got = factory(perturbed, seed).precoders(csit_view(config, perturbed, t))
            except (ArithmeticError, ValueError, LookupError):
                return False
            if tuple(got) != reference.precoders[t]:
                return False
    return True


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng([abs(int(x)) for x in key])


def _random_int_matrix(rng: np.random.Generator, rows: int, cols: int) -> RationalMatrix:
    vals = rng.integers(-PRECODER_RANGE, PRECODER_RANGE, size=(rows, cols), endpoint=True)
    return RationalMatrix(vals.tolist(), cols=cols)


class RandomPolicy(Policy):
    """Seeded random precoders of one of the three generator kinds.

    ``oblivious`` ignores the channel. ``delayed-mixing`` either keeps the
    oblivious draw, retransmits (rank one) what a D receiver heard of the
    oblivious draw at an earlier slot, or adds random integer multiples of
    degree-1/degree-2 monomials in the visible coefficients. With an empty
    view it reproduces the oblivious draw exactly. ``zero-forcing-hybrid``
    projects P receivers' draws onto the null space of the other P receivers'
    current channels.
    """

    def __init__(self, config: CsitConfig, kind: str, n: int, symbols: Sequence[int], seed: int,
                 m: int | None = None):
        if kind not in KINDS:
            raise ValueError(f"unknown generator kind {kind!r}; choose from {KINDS}")
        if len(symbols) != config.k or any(s < 0 for s in symbols):
            raise ValueError("need one nonnegative symbol count per receiver")
        super().__init__(config.k, m if m is not None else config.k, n, symbols)
        self.config = config
        self.kind = kind
        self.seed = seed
        self.tag = f"{kind}:{seed}"

    def _base(self, t: int, j: int) -> RationalMatrix:
        return _random_int_matrix(_rng(self.seed, t, j, 0), self.m, self.symbols[j])

    def precoders(self, view: CsitView) -> tuple[RationalMatrix, ...]:
        t = view.t
        if self.kind == "oblivious":
            return tuple(self._base(t, j) for j in range(self.k))
        if self.kind == "delayed-mixing":
            return tuple(self._mixed(view, j) for j in range(self.k))
        return tuple(self._zero_forced(view, j) for j in range(self.k))

    def _mixed(self, view: CsitView, j: int) -> RationalMatrix:
        t, m, cols = view.t, self.m, self.symbols[j]
        base = self._base(t, j)
        if view.is_empty() or cols == 0:
            return base
        rng = _rng(self.seed, t, j, 1)
        mode = rng.choice(3, p=[0.2, 0.4, 0.4])
        delayed = [(d, s) for d in self.config.D for s in range(t) if view.visible(d, s)]
        if mode == 0:
            return base
        if mode == 1 and delayed:
            d, s = delayed[int(rng.integers(len(delayed)))]
            heard = _row_times(view.row(d, s), self._base(s, j))
            u = rng.integers(-PRECODER_RANGE, PRECODER_RANGE, size=m, endpoint=True).tolist()
            return RationalMatrix([[ui * h for h in heard] for ui in u], cols=cols)
        coeffs = [x for (_, _, _, x) in view.coefficients()]
        body = [list(r) for r in base.row_tuples()]
        for _ in range(3):
            degree = int(rng.integers(1, 3))
            mono = 1
            for _ in range(degree):
                mono *= coeffs[int(rng.integers(len(coeffs)))]
            weights = rng.integers(-PRECODER_RANGE, PRECODER_RANGE, size=(m, cols), endpoint=True).tolist()
            for a in range(m):
                for c in range(cols):
                    body[a][c] += weights[a][c] * mono
        return RationalMatrix(body, cols=cols)

    def _zero_forced(self, view: CsitView, j: int) -> RationalMatrix:
        if self.config.state(j) is not CsitState.P:
            return self._base(view.t, j)
        others = [view.row(p, view.t) for p in self.config.P if p != j]
        if not others:
            return self._base(view.t, j)
        null = orthogonal_complement(RationalMatrix(others, cols=self.m))
        draw = _random_int_matrix(_rng(self.seed, view.t, j, 2), null.rows, self.symbols[j])
        return null.transpose() @ draw


def random_policy(config: CsitConfig, kind: str, n: int, symbols: Sequence[int], seed: int,
                  m: int | None = None) -> RandomPolicy:
    return RandomPolicy(config, kind, n, symbols, seed, m)


def random_strategy(config: CsitConfig, kind: str, realization: ChannelRealization,
                    symbols: Sequence[int], seed: int) -> LinearStrategy:
    """Random CSIT-compliant strategy over ``realization`` (dims n, m from it)."""
    policy = RandomPolicy(config, kind, realization.n, symbols, seed, realization.m)
    return realize(policy, config, realization)


__all__ = [
    "KINDS",
    "DecodabilityRecord",
    "LinearStrategy",
    "NonReproducibleGeneratorError",
    "Policy",
    "RandomPolicy",
    "Transcript",
    "assemble",
    "check_decodability",
    "is_decodable",
    "random_policy",
    "random_strategy",
    "realize",
    "received",
    "validate_csit_compliance",
]
