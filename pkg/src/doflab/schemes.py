"""Constructive linear schemes emitted as CSIT-compliant policies.

* zero forcing for the instantaneous-CSIT receivers,
* the four-slot PDD scheme delivering (3, 2, 2) symbols,
* the 2^(K-1)-slot scheme for K-1 instantaneous receivers plus one delayed one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .channel import ChannelRealization, CsitConfig, CsitState, CsitView
from .exactlin import DegenerateInputError, RationalMatrix, Scalar, as_scalar, orthogonal_complement
from .strategy import LinearStrategy, Policy, _row_times, realize


class SchemeError(RuntimeError):
    """The channel draw is degenerate for this scheme; resample and retry."""


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    config: CsitConfig
    n: int
    symbols: tuple[int, ...]

    @property
    def dof(self) -> tuple[Fraction, ...]:
        return achieved_dof(self)


def achieved_dof(obj: LinearStrategy | SchemeSpec | tuple[Sequence[int], int]) -> tuple[Fraction, ...]:
    """Exact m_j / n per receiver."""
    if isinstance(obj, (LinearStrategy, SchemeSpec)):
        symbols, n = obj.symbols, obj.n
    else:
        symbols, n = obj
    if n == 0:
        raise ValueError("block length must be positive")
    return tuple(Fraction(s, n) for s in symbols)


def _dot(a: Sequence[Scalar], b: Sequence[Scalar]) -> Scalar:
    return as_scalar(sum(x * y for x, y in zip(a, b)))


def steered_complement(others: Sequence[Sequence[Scalar]], own: Sequence[Scalar], m: int) -> list[tuple[Scalar, ...]]:
    """Null-space basis of ``others`` with a row seen by ``own`` placed first."""
    try:
        null = orthogonal_complement(RationalMatrix(others, cols=m))
    except DegenerateInputError as exc:
        raise SchemeError(f"channel rows are dependent: {exc}") from exc
    rows = list(null.row_tuples())
    for i, r in enumerate(rows):
        if _dot(r, own) != 0:
            return [r] + rows[:i] + rows[i + 1:]
    raise SchemeError("intended receiver is orthogonal to the zero-forcing subspace")


class _Builder:
    """Mutable m x cols matrix used while assembling one slot."""

    def __init__(self, m: int, cols: int):
        self.cols = cols
        self.body = [[0] * cols for _ in range(m)]

    def put_column(self, c: int, vec: Sequence[Scalar]) -> None:
        for a, x in enumerate(vec):
            self.body[a][c] += x

    def add_outer(self, vec: Sequence[Scalar], form: Sequence[Scalar]) -> None:
        for a, x in enumerate(vec):
            if x:
                row = self.body[a]
                for c, y in enumerate(form):
                    if y:
                        row[c] += x * y

    def freeze(self) -> RationalMatrix:
        return RationalMatrix(self.body, cols=self.cols)


class ZeroForcingPolicy(Policy):
    """One fresh symbol per slot to every P receiver, nulled at the other P receivers."""

    def __init__(self, config: CsitConfig, n: int, m: int | None = None):
        P = config.P
        if not P:
            raise ValueError("zero forcing needs at least one P receiver")
        m = config.k if m is None else m
        if m < len(P):
            raise ValueError("zero forcing needs m >= |P|")
        symbols = tuple(n if s is CsitState.P else 0 for s in config.states)
        super().__init__(config.k, m, n, symbols)
        self.config = config
        self.tag = f"zf:{config}"

    def precoders(self, view: CsitView) -> tuple[RationalMatrix, ...]:
        t, P = view.t, self.config.P
        out = []
        for j in range(self.k):
            b = _Builder(self.m, self.symbols[j])
            if j in P:
                others = [view.row(p, t) for p in P if p != j]
                beam = steered_complement(others, view.row(j, t), self.m)[0]
                b.put_column(t, beam)
            out.append(b.freeze())
        return tuple(out)


def zero_forcing_scheme(config: CsitConfig, realization: ChannelRealization, n: int | None = None) -> LinearStrategy:
    if n is not None and n != realization.n:
        raise ValueError("block length differs from the realization's")
    return realize(ZeroForcingPolicy(config, realization.n, realization.m), config, realization)


PDD = CsitConfig.parse("PDD")


class PddPolicy(Policy):
    """Four slots, three antennas, symbols (3, 2, 2) for the PDD configuration.

    Slot 0 sends a1..a3 raw. Slots 1 and 2 repeat what receivers 1 and 2
    heard in slot 0 on antenna 0, together with two fresh symbols for that
    receiver hidden from receiver 0 by zero forcing. Slot 3 sends the sum of
    what receiver 2 heard in slot 1 and receiver 1 heard in slot 2, which each
    of them can use after removing their own side information.
    """

    tag = "pdd"

    def __init__(self):
        super().__init__(3, 3, 4, (3, 2, 2))
        self._cache: dict[CsitView, tuple[RationalMatrix, ...]] = {}

    def precoders(self, view: CsitView) -> tuple[RationalMatrix, ...]:
        if view.config != PDD:
            raise ValueError("the PDD scheme needs config PDD")
        hit = self._cache.get(view)
        if hit is None:
            hit = self._slot(view)
            self._cache[view] = hit
        return hit

    def _slot(self, view: CsitView) -> tuple[RationalMatrix, ...]:
        t = view.t
        b = [_Builder(3, s) for s in self.symbols]
        if t == 0:
            for c in range(3):
                b[0].put_column(c, [1 if a == c else 0 for a in range(3)])
        elif t in (1, 2):
            listener = t  # receiver whose slot-0 observation is repeated
            b[0].add_outer([1, 0, 0], view.row(listener, 0))
            try:
                null = orthogonal_complement(RationalMatrix([view.row(0, t)], cols=3))
            except DegenerateInputError as exc:
                raise SchemeError(str(exc)) from exc
            for c, r in enumerate(null.row_tuples()):
                b[listener].put_column(c, r)
        else:
            heard_by_2 = self._heard(view, receiver=2, slot=1)
            heard_by_1 = self._heard(view, receiver=1, slot=2)
            for q in range(3):
                form = [as_scalar(x + y) for x, y in zip(heard_by_2[q], heard_by_1[q])]
                b[q].add_outer([1, 0, 0], form)
        return tuple(x.freeze() for x in b)

    def _heard(self, view: CsitView, receiver: int, slot: int) -> list[tuple[Scalar, ...]]:
        """Per-receiver symbol coefficients of ``receiver``'s slot observation."""
        past = self.precoders(view.at(slot))
        g = view.row(receiver, slot)
        return [_row_times(g, V) for V in past]


def pdd_scheme(realization: ChannelRealization) -> LinearStrategy:
    if (realization.k, realization.m, realization.n) != (3, 3, 4):
        raise ValueError("the PDD scheme runs with k = 3, m = 3, n = 4")
    return realize(PddPolicy(), PDD, realization)


@dataclass(frozen=True)
class PhaseSlot:
    """One slot of the K-user scheme: phase i, repetition set R, fresh set F."""

    slot: int
    phase: int
    repetition: tuple[int, ...]
    fresh: tuple[int, ...]


def phase_plan(K: int) -> tuple[PhaseSlot, ...]:
    """Phases 0..K-1; phase i spends one slot per i-subset of the P receivers (lexicographic)."""
    if K < 2:
        raise ValueError("the scheme needs K >= 2")
    P = tuple(range(K - 1))
    out = []
    for i in range(K):
        for R in combinations(P, i):
            F = tuple(p for p in P if p not in R)
            out.append(PhaseSlot(len(out), i, R, F))
    return tuple(out)


def equation_accounting(K: int) -> dict[int, tuple[int, int]]:
    """Per P receiver: (slots where it gets fresh symbols, slots where it gets a repetition)."""
    plan = phase_plan(K)
    counts = {}
    for q in range(K - 1):
        fresh = sum(1 for s in plan if q in s.fresh)
        rep = sum(1 for s in plan if q in s.repetition)
        counts[q] = (fresh, rep)
    return counts


def kuser_config(K: int) -> CsitConfig:
    return CsitConfig.parse("P" * (K - 1) + "D")


class KUserD1Policy(Policy):
    """2^(K-1) slots for K-1 P receivers and a single D receiver (the last one).

    Every slot gives each P receiver one clean equation. Fresh receivers get a
    new pair of symbols along their zero-forcing pair; receivers in the
    repetition set get the part of an earlier delayed-receiver equation that
    they want. The transmitter rebuilds the delayed receiver's equations from
    delayed channel rows and its own past precoders, eliminating the symbols
    that were already repeated, exactly as the delayed receiver itself does.
    """

    def __init__(self, K: int):
        if K < 2:
            raise ValueError("the scheme needs K >= 2")
        n = 2 ** (K - 1)
        super().__init__(K, K, n, (n,) * (K - 1) + (1,))
        self.K = K
        self.config = kuser_config(K)
        self.tag = f"kuser-d1:K={K}"
        self.plan = phase_plan(K)
        self.phase_start = [min(s.slot for s in self.plan if s.phase == i) for i in range(K)]
        self.offsets = [sum(self.symbols[:q]) for q in range(K)]
        self.total = sum(self.symbols)
        # fresh symbol columns per (slot, receiver), allocated in slot order
        used = [0] * (K - 1)
        self.fresh_cols: dict[tuple[int, int], tuple[int, int]] = {}
        for s in self.plan:
            for q in s.fresh:
                self.fresh_cols[(s.slot, q)] = (used[q], used[q] + 1)
                used[q] += 2
        assert used == [n] * (K - 1)
        self._slots: dict[CsitView, tuple[tuple[RationalMatrix, ...], dict[int, tuple]]] = {}
        self._eqs: dict[tuple[int, CsitView], dict[tuple[int, ...], list[Scalar]]] = {}

    def precoders(self, view: CsitView) -> tuple[RationalMatrix, ...]:
        if view.config != self.config:
            raise ValueError(f"this scheme needs config {self.config}")
        return self._slot(view)[0]

    def _part(self, eq: Sequence[Scalar], q: int) -> list[Scalar]:
        lo = self.offsets[q]
        return list(eq[lo:lo + self.symbols[q]])

    def interferers(self, eq: Sequence[Scalar]) -> set[int]:
        return {q for q in range(self.K - 1) if any(self._part(eq, q))}

    def _slot(self, view: CsitView):
        hit = self._slots.get(view)
        if hit is not None:
            return hit
        K, t = self.K, view.t
        spec = self.plan[t]
        P = range(K - 1)
        rows = {p: view.row(p, t) for p in P}
        builders = [_Builder(K, s) for s in self.symbols]
        sources = self._repetition_sources(view, spec) if spec.phase > 0 else {}
        directions = {}
        for q in P:
            others = [rows[p] for p in P if p != q]
            pair = steered_complement(others, rows[q], K)
            if len(pair) != 2:
                raise SchemeError("zero-forcing subspace should be two dimensional")
            if q in spec.fresh:
                c0, c1 = self.fresh_cols[(t, q)]
                builders[q].put_column(c0, pair[0])
                builders[q].put_column(c1, pair[1])
            else:
                builders[q].add_outer(pair[0], self._part(sources[q], q))
                directions[q] = pair[0]
        if spec.phase == 0:
            common = orthogonal_complement(RationalMatrix([rows[p] for p in P], cols=K))
            builders[K - 1].put_column(0, common.row(0))
        hit = (tuple(b.freeze() for b in builders), directions)
        self._slots[view] = hit
        return hit

    def _repetition_sources(self, view: CsitView, spec: PhaseSlot) -> dict[int, list[Scalar]]:
        """Map each r in R to the previous-phase equation it is repeated from.

        Candidates are previous-phase equations whose interfering receivers
        include every fresh receiver of this slot; exactly ``phase`` of them
        must exist, each adding a single receiver of R.
        """
        i = spec.phase
        previous = self._equations(i - 1, view.at(self.phase_start[i]))
        F = set(spec.fresh)
        picked = [eq for eq in previous.values() if F <= self.interferers(eq)]
        if len(picked) != i:
            raise SchemeError(f"expected {i} source equations for slot {spec.slot}, found {len(picked)}")
        out = {}
        for eq in picked:
            extra = self.interferers(eq) & set(spec.repetition)
            if len(extra) != 1:
                raise SchemeError(f"source equation for slot {spec.slot} mixes receivers {sorted(extra)}")
            (r,) = extra
            out[r] = eq
        if set(out) != set(spec.repetition):
            raise SchemeError(f"repetition sources do not cover {spec.repetition}")
        return out

    def _equations(self, phase: int, view: CsitView) -> dict[tuple[int, ...], list[Scalar]]:
        """Delayed receiver's reduced equations for every slot of ``phase``.

        ``view`` must sit at the first slot after the phase, so the delayed
        receiver's rows for the whole phase are visible.
        """
        key = (phase, view)
        hit = self._eqs.get(key)
        if hit is not None:
            return hit
        K = self.K
        eqs: dict[tuple[int, ...], list[Scalar]] = {}
        for spec in self.plan:
            if spec.phase != phase:
                continue
            precoders, directions = self._slot(view.at(spec.slot))
            g = view.row(K - 1, spec.slot)
            y = [x for V in precoders for x in _row_times(g, V)]
            if phase > 0:
                sources = self._repetition_sources(view.at(spec.slot), spec)
                for r in spec.repetition:
                    alpha = _dot(g, directions[r])
                    y = [as_scalar(a - alpha * b) for a, b in zip(y, sources[r])]
            for r in spec.repetition:
                if any(self._part(y, r)):
                    raise SchemeError(f"repeated receiver {r} did not cancel at slot {spec.slot}")
            eqs[spec.repetition] = y
        self._eqs[key] = eqs
        return eqs


def kuser_d1_scheme(K: int, realization: ChannelRealization) -> LinearStrategy:
    if K < 2:
        raise ValueError("the scheme needs K >= 2")
    if (realization.k, realization.m, realization.n) != (K, K, 2 ** (K - 1)):
        raise ValueError(f"realization must have k = m = {K} and n = {2 ** (K - 1)}")
    policy = KUserD1Policy(K)
    return realize(policy, policy.config, realization)


def scheme_spec(name: str, config: CsitConfig, n: int) -> SchemeSpec:
    """Target symbol counts of a named scheme."""
    if name == "zf":
        return SchemeSpec(name, config, n, tuple(n if s is CsitState.P else 0 for s in config.states))
    if name == "pdd":
        return SchemeSpec(name, PDD, 4, (3, 2, 2))
    if name == "kuser-d1":
        K = config.k
        return SchemeSpec(name, kuser_config(K), 2 ** (K - 1), (2 ** (K - 1),) * (K - 1) + (1,))
    raise ValueError(f"unknown scheme {name!r}")
