"""Property-test harness for the rank inequalities behind the converse bounds.

Each ``check_*`` function evaluates one inequality on a transcript and returns
exact left and right sides. Checks refuse parameterizations that break the
inequality's CSIT hypothesis, because the inequality can genuinely fail there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import partial
from fractions import Fraction
from itertools import combinations, permutations
from typing import Callable, Iterable, Sequence

import numpy as np

from .channel import CsitConfig, CsitState, sample_channel
from .exactlin import RowSpace, coordinate_intersection_dim, format_rational
from .strategy import KINDS, Transcript, assemble, check_decodability, random_strategy


class HypothesisViolation(ValueError):
    """The requested instance does not satisfy the inequality's hypotheses."""


@dataclass(frozen=True)
class CheckResult:
    lemma: str
    params: dict
    lhs: Fraction
    rhs: Fraction
    relation: str = "<="
    seed: int | None = None
    tag: str = ""

    @property
    def passed(self) -> bool:
        if self.relation == "==":
            return self.lhs == self.rhs
        return self.lhs <= self.rhs

    @property
    def slack(self) -> Fraction:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params,
            "lhs": format_rational(self.lhs, always_denominator=True),
            "rhs": format_rational(self.rhs, always_denominator=True),
            "relation": self.relation,
            "pass": self.passed,
            "seed": self.seed,
            "strategy": self.tag,
        }


@dataclass(frozen=True)
class TSetResult:
    T1: frozenset[int]
    T2: frozenset[int]


def _config(tr: Transcript) -> CsitConfig:
    if tr.config is None:
        raise HypothesisViolation("transcript carries no CSIT configuration")
    return tr.config


def _require(tr: Transcript, j: int, allowed: Iterable[CsitState], what: str) -> None:
    state = _config(tr).state(j)
    if state not in set(allowed):
        raise HypothesisViolation(f"hypothesis violated: receiver {j} is {state.value}, {what}")


def _result(tr: Transcript, lemma: str, params: dict, lhs, rhs, relation: str = "<=") -> CheckResult:
    return CheckResult(lemma, params, Fraction(lhs), Fraction(rhs), relation, tr.realization.seed, tr.strategy.tag)


def _set(S: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(set(S)))


def check_idb(tr: Transcript, S: Iterable[int], l: int, j: int) -> CheckResult:
    """(r_l(S) - r_l(S-l) + r_j(S-l)) / 2 <= r_j(S) for a D receiver j outside S."""
    S = _set(S)
    _require(tr, j, [CsitState.D], "the bound needs a delayed-CSIT receiver")
    if j in S or l not in S:
        raise HypothesisViolation("need l in S and j outside S")
    rest = [i for i in S if i != l]
    lhs = Fraction(tr.rank(l, S) - tr.rank(l, rest) + tr.rank(j, rest), 2)
    return _result(tr, "idb", {"S": list(S), "l": l, "j": j}, lhs, tr.rank(j, S))


def check_rri(tr: Transcript, S: Iterable[int], seq: Sequence[int]) -> CheckResult:
    """rank[Y_1..Y_{q+1}]/(q+1) <= rank[Y_1..Y_q]/q where the first q receivers are D."""
    S = _set(S)
    seq = list(seq)
    if len(seq) < 2 or len(set(seq)) != len(seq):
        raise HypothesisViolation("need at least two distinct receivers")
    q = len(seq) - 1
    for i in seq[:q]:
        _require(tr, i, [CsitState.D], "the leading receivers must have delayed CSIT")
    lhs = Fraction(tr.stacked_rank(seq, S), q + 1)
    rhs = Fraction(tr.stacked_rank(seq[:q], S), q)
    return _result(tr, "rri", {"S": list(S), "seq": seq}, lhs, rhs)


def check_lal(tr: Transcript, S: Iterable[int], j: int, l: int) -> CheckResult:
    """r_l(S) <= r_j(S) when receiver j has no CSIT."""
    S = _set(S)
    _require(tr, j, [CsitState.N], "the lemma needs a no-CSIT receiver")
    return _result(tr, "lal", {"S": list(S), "j": j, "l": l}, tr.rank(l, S), tr.rank(j, S))


def check_submodularity(tr: Transcript, j: int, S1: Iterable[int], S2: Iterable[int]) -> CheckResult:
    """Column form: r_j(S1 & S2) + r_j(S1 | S2) <= r_j(S1) + r_j(S2)."""
    A, B = set(S1), set(S2)
    lhs = tr.rank(j, A & B) + tr.rank(j, A | B)
    rhs = tr.rank(j, A) + tr.rank(j, B)
    return _result(tr, "submodularity", {"form": "columns", "j": j, "S1": sorted(A), "S2": sorted(B)}, lhs, rhs)


def check_row_submodularity(tr: Transcript, R1: Iterable[int], R2: Iterable[int], S: Iterable[int]) -> CheckResult:
    """Row form over stacked receivers with the same transmit set S."""
    A, B = set(R1), set(R2)
    lhs = tr.stacked_rank(A & B, S) + tr.stacked_rank(A | B, S)
    rhs = tr.stacked_rank(A, S) + tr.stacked_rank(B, S)
    return _result(tr, "submodularity", {"form": "rows", "R1": sorted(A), "R2": sorted(B), "S": _set(S)}, lhs, rhs)


def compute_t_sets(tr: Transcript, S: Iterable[int], l: int, j: int) -> TSetResult:
    """Slots where l's prefix rank grows (T1), and those whose new row j had already seen (T2)."""
    S = _set(S)
    rows_l = tr.row_block(l, S)
    rows_j = tr.row_block(j, S)
    cols = sum(tr.symbols[i] for i in S)
    seen_l, seen_j = RowSpace(cols), RowSpace(cols)
    T1, T2 = set(), set()
    for t in range(tr.n):
        if seen_l.add(rows_l[t]):
            T1.add(t)
            if seen_j.contains(rows_l[t]):
                T2.add(t)
        seen_j.add(rows_j[t])
    return TSetResult(frozenset(T1), frozenset(T2))


def check_idb_sublemmas(tr: Transcript, S: Iterable[int], l: int, j: int) -> tuple[CheckResult, CheckResult]:
    """The two halves of the interference decomposition bound.

    A: r_l(S) - |T2| <= r_j(S).
    B: |T2| - r_l(S-l) <= r_j(S) - r_j(S-l).
    Their sum is twice the bound checked by :func:`check_idb`.
    """
    S = _set(S)
    whole = check_idb(tr, S, l, j)
    sets = compute_t_sets(tr, S, l, j)
    rest = [i for i in S if i != l]
    t2 = len(sets.T2)
    params = {"S": list(S), "l": l, "j": j, "T1": sorted(sets.T1), "T2": sorted(sets.T2)}
    a = _result(tr, "idb_sublemma_a", params, tr.rank(l, S) - t2, tr.rank(j, S))
    b = _result(tr, "idb_sublemma_b", params, t2 - tr.rank(l, rest), tr.rank(j, S) - tr.rank(j, rest))
    if (a.lhs + b.lhs) - (a.rhs + b.rhs) != 2 * (whole.lhs - whole.rhs):
        raise AssertionError("sub-inequalities do not add up to the full bound")
    return a, b


def check_dcsit_event(tr: Transcript, S: Iterable[int], j: int) -> frozenset[int]:
    """Slots where j's prefix rank stalls but the slot's transmit space is not already inside it."""
    S = _set(S)
    _require(tr, j, [CsitState.D, CsitState.N], "the event lemma needs delayed or no CSIT")
    cols = sum(tr.symbols[i] for i in S)
    rows_j = tr.row_block(j, S)
    seen = RowSpace(cols)
    bad = set()
    for t in range(tr.n):
        if seen.contains(rows_j[t]):
            slot_rows = [sum((V.row(a) for V in (tr.strategy.precoders[t][i] for i in S)), ())
                         for a in range(tr.strategy.m)]
            if not all(seen.contains(r) for r in slot_rows):
                bad.add(t)
        seen.add(rows_j[t])
    return frozenset(bad)


def _dims(tr: Transcript, effective: bool) -> list[int]:
    records = check_decodability(tr)
    if effective:
        return [r.clean_dims for r in records]
    if not all(r.achieved for r in records):
        raise HypothesisViolation("claim requires achieved m_j")
    return list(tr.symbols)


def default_order(config: CsitConfig) -> list[int]:
    """P receivers then D receivers, each in index order."""
    return list(config.P) + list(config.D)


def check_claim_induction(tr: Transcript, order: Sequence[int] | None = None,
                          effective: bool = False) -> CheckResult:
    """sum_{s<q} m_{o(s)} / 2^s <= rank[G_{o(q)} [V_{o(1)} .. V_{o(q-1)}]].

    ``order`` lists P/D receivers ending with a D receiver; the default is P
    receivers then D receivers. With ``effective=True`` the symbol counts are
    replaced by lhs - interference ranks, which equal m_j on decodable
    transcripts and keep the inequality valid on any compliant transcript.
    """
    config = _config(tr)
    order = list(order) if order is not None else default_order(config)
    if not order:
        raise HypothesisViolation("need at least one P or D receiver")
    _require(tr, order[-1], [CsitState.D], "the last receiver of the ordering must be delayed")
    m = _dims(tr, effective)
    lhs = sum((Fraction(m[i], 2 ** (s + 1)) for s, i in enumerate(order[:-1])), Fraction(0))
    rhs = tr.rank(order[-1], order[:-1])
    return _result(tr, "claim_induction", {"order": order, "effective": effective}, lhs, rhs)


def check_claim_mimo_variant(tr: Transcript) -> CheckResult:
    """rank[[all G][V_P]] / k <= rank[[G_D][V_P]] / |D|."""
    config = _config(tr)
    if not config.D:
        raise HypothesisViolation("need at least one D receiver")
    P, D = config.P, config.D
    lhs = Fraction(tr.stacked_rank(range(config.k), P), config.k)
    rhs = Fraction(tr.stacked_rank(D, P), len(D))
    return _result(tr, "claim_mimo_variant", {"P": list(P), "D": list(D)}, lhs, rhs)


def check_claim_dimrank(tr: Transcript, j: int, S: Iterable[int], l: int) -> CheckResult:
    """dim{w in rowspan[A B] : w is zero on B} == rank[A B] - rank[B] with A = l's columns."""
    S = _set(S)
    if l not in S:
        raise HypothesisViolation("l must belong to S")
    M = tr.received(j, S)
    zero_cols, c = [], 0
    for i in S:
        if i != l:
            zero_cols.extend(range(c, c + tr.symbols[i]))
        c += tr.symbols[i]
    rest = [i for i in S if i != l]
    lhs = coordinate_intersection_dim(M, zero_cols)
    rhs = tr.rank(j, S) - tr.rank(j, rest)
    return _result(tr, "claim_dimrank", {"j": j, "S": list(S), "l": l}, lhs, rhs, "==")


def check_pdd_converse_chain(tr: Transcript, effective: bool = True) -> tuple[CheckResult, CheckResult]:
    """Two steps of the PDD outer-bound chain (receivers 0, 1, 2 = P, D, D).

    2 rank[G_2 [V_0 V_1]] >= m_0 + m_1/2 and m_0 + m_1/2 + 2 m_2 <= 2n.
    """
    if str(_config(tr)) != "PDD":
        raise HypothesisViolation("the chain is stated for config PDD")
    m = _dims(tr, effective)
    first = _result(tr, "pdd_chain_interference", {"effective": effective},
                    Fraction(m[0]) + Fraction(m[1], 2), 2 * tr.rank(2, [0, 1]))
    second = _result(tr, "pdd_chain_sum", {"effective": effective},
                     Fraction(m[0]) + Fraction(m[1], 2) + 2 * m[2], 2 * tr.n)
    return first, second


LEMMAS = (
    "idb", "idb_sublemma_a", "idb_sublemma_b", "rri", "lal", "submodularity",
    "dcsit_event", "claim_induction", "claim_mimo_variant", "claim_dimrank", "pdd_chain",
)


def applicable_lemmas(config: CsitConfig) -> list[str]:
    P, D, N = config.P, config.D, config.N
    out = []
    if D and config.k > 1:
        out += ["idb", "idb_sublemma_a", "idb_sublemma_b", "rri"]
    if N:
        out.append("lal")
    out.append("submodularity")
    if D or N:
        out.append("dcsit_event")
    if D and len(P) + len(D) >= 2:
        out.append("claim_induction")
    if D:
        out.append("claim_mimo_variant")
    out.append("claim_dimrank")
    if str(config) == "PDD":
        out.append("pdd_chain")
    return out


def _subsets(items: Sequence[int], min_size: int = 1) -> list[tuple[int, ...]]:
    return [c for r in range(min_size, len(items) + 1) for c in combinations(items, r)]


def _instance_thunks(lemma: str, tr: Transcript) -> list[Callable[[], CheckResult]]:
    """One deferred check per parameter choice, so callers can subsample cheaply."""
    config = _config(tr)
    k = config.k
    everyone = list(range(k))
    out: list[Callable[[], CheckResult]] = []
    if lemma in ("idb", "idb_sublemma_a", "idb_sublemma_b"):
        for j in config.D:
            for S in _subsets([i for i in everyone if i != j]):
                for l in S:
                    if lemma == "idb":
                        out.append(partial(check_idb, tr, S, l, j))
                    else:
                        side = 0 if lemma.endswith("a") else 1
                        out.append(lambda S=S, l=l, j=j, side=side: check_idb_sublemmas(tr, S, l, j)[side])
    elif lemma == "rri":
        for S in _subsets(everyone):
            for q in range(1, len(config.D) + 1):
                for head in permutations(config.D, q):
                    for last in everyone:
                        if last not in head:
                            out.append(partial(check_rri, tr, S, list(head) + [last]))
    elif lemma == "lal":
        for j in config.N:
            for S in _subsets(everyone):
                for l in everyone:
                    if l != j:
                        out.append(partial(check_lal, tr, S, j, l))
    elif lemma == "submodularity":
        subsets = _subsets(everyone, 0)
        for j in everyone:
            for S1, S2 in combinations(subsets, 2):
                out.append(partial(check_submodularity, tr, j, S1, S2))
        for R1, R2 in combinations(_subsets(everyone), 2):
            out.append(partial(check_row_submodularity, tr, R1, R2, everyone))
    elif lemma == "dcsit_event":
        for j in config.D + config.N:
            for S in _subsets(everyone):
                out.append(partial(_dcsit_result, tr, S, j))
    elif lemma == "claim_induction":
        active = config.P + config.D
        for order in permutations(active):
            if config.state(order[-1]) is CsitState.D:
                out.append(partial(check_claim_induction, tr, order, effective=True))
    elif lemma == "claim_mimo_variant":
        out.append(partial(check_claim_mimo_variant, tr))
    elif lemma == "claim_dimrank":
        for j in everyone:
            for S in _subsets(everyone):
                for l in S:
                    out.append(partial(check_claim_dimrank, tr, j, S, l))
    elif lemma == "pdd_chain":
        out.append(lambda: check_pdd_converse_chain(tr, effective=True)[0])
        out.append(lambda: check_pdd_converse_chain(tr, effective=True)[1])
    else:
        raise ValueError(f"unknown lemma {lemma!r}")
    return out


def _dcsit_result(tr: Transcript, S: Sequence[int], j: int) -> CheckResult:
    bad = check_dcsit_event(tr, S, j)
    return _result(tr, "dcsit_event", {"S": list(S), "j": j, "slots": sorted(bad)}, len(bad), 0)


def lemma_instances(lemma: str, tr: Transcript) -> list[CheckResult]:
    """Every instance of ``lemma`` on ``tr`` (all parameter choices)."""
    return [thunk() for thunk in _instance_thunks(lemma, tr)]


@dataclass
class LemmaTally:
    config: str
    lemma: str
    kind: str
    trials: int = 0
    passes: int = 0
    instances: int = 0
    min_slack: Fraction | None = None
    violations: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "lemma": self.lemma,
            "kind": self.kind,
            "trials": self.trials,
            "passes": self.passes,
            "instances": self.instances,
            "minSlack": None if self.min_slack is None else format_rational(self.min_slack, always_denominator=True),
            "violations": self.violations,
        }


@dataclass
class SuiteReport:
    config: str
    seed: int
    trials: int
    kinds: tuple[str, ...]
    tallies: list[LemmaTally]
    skipped: list[str]

    @property
    def violation_count(self) -> int:
        return sum(len(t.violations) for t in self.tallies)

    @property
    def ok(self) -> bool:
        return self.violation_count == 0

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "trials": self.trials,
            "kinds": list(self.kinds),
            "channel": "uniform integers in [-100, 100], generic slots",
            "skipped": self.skipped,
            "results": [t.to_dict() for t in self.tallies],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def trial_transcript(config: CsitConfig, kind: str, trial_seed: int, n: int | None = None,
                     max_symbols: int = 3) -> Transcript:
    """One random transcript; dimensions and channel are drawn from ``trial_seed``."""
    k = config.k
    n = n if n is not None else k + 1
    rng = np.random.default_rng([abs(trial_seed), 7])
    symbols = [int(x) for x in rng.integers(0, max_symbols, size=k, endpoint=True)]
    realization = sample_channel(k, k, n, trial_seed)
    return assemble(random_strategy(config, kind, realization, symbols, trial_seed), realization)


def _sample(thunks: list, limit: int | None, rng: np.random.Generator) -> list[CheckResult]:
    if limit is not None and len(thunks) > limit:
        idx = sorted(rng.choice(len(thunks), size=limit, replace=False).tolist())
        thunks = [thunks[i] for i in idx]
    return [thunk() for thunk in thunks]


def run_suite(config: CsitConfig | str, kinds: Sequence[str] = KINDS, trials: int = 100, seed: int = 0,
              max_instances: int | None = None) -> SuiteReport:
    """Run every applicable lemma on ``trials`` random transcripts per generator kind.

    Trial i uses seed ``seed + i``. A trial passes a lemma when every checked
    instance passes. For k > 3 the instances per lemma can be capped with
    ``max_instances`` (a seeded subsample of the full enumeration).
    """
    if isinstance(config, str):
        config = CsitConfig.parse(config)
    if max_instances is None and config.k > 3:
        max_instances = 24
    lemmas = applicable_lemmas(config)
    skipped = [name for name in LEMMAS if name not in lemmas]
    tallies = {(lem, kind): LemmaTally(str(config), lem, kind) for kind in kinds for lem in lemmas}
    for kind in kinds:
        for i in range(trials):
            trial_seed = seed + i
            tr = trial_transcript(config, kind, trial_seed)
            pick = np.random.default_rng([abs(trial_seed), 11])
            for lem in lemmas:
                tally = tallies[(lem, kind)]
                results = _sample(_instance_thunks(lem, tr), max_instances, pick)
                tally.trials += 1
                tally.instances += len(results)
                failed = [r for r in results if not r.passed]
                if not failed:
                    tally.passes += 1
                else:
                    tally.violations.append({
                        "trial": i,
                        "seed": trial_seed,
                        "checks": [r.to_dict() for r in failed],
                        "transcript": tr.to_dict(include_matrices=True),
                    })
                for r in results:
                    if tally.min_slack is None or r.slack < tally.min_slack:
                        tally.min_slack = r.slack
    ordered = [tallies[(lem, kind)] for lem in lemmas for kind in kinds]
    return SuiteReport(str(config), seed, trials, tuple(kinds), ordered, skipped)
