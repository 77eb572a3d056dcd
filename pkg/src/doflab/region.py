"""DoF-region polytopes, exact sum-DoF linear programs and vertex enumeration.

The region for a CSIT configuration (P, D, N) is cut out by three families of
half-spaces plus the unit box:

* ``idb``: for each D receiver i and each ordering of the other P/D
  receivers, the ordered receivers get weights 1/2, 1/4, ..., receiver i gets
  weight 1 and every N receiver weight 1;
* ``mat``: for each ordering of the D receivers, weights 1, 1/2, 1/3, ...
  on the ordered D receivers, 1/k on every P receiver and 1 on N receivers;
* ``nsum``: for each P or D receiver i, d_i plus the N receivers.

For three receivers this is the exact region; for more it is an outer bound.
Both the families and their separation oracles are symmetric under
reordering, so linear programs can be solved for any k by cutting planes
without listing every permutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations, permutations, product
from typing import Iterable, Sequence

import numpy as np

from .channel import CsitConfig, CsitState
from .exactlin import RationalMatrix, rank

MAX_LISTED_K = 7
MAX_VERTEX_K = 4

TABLE1_CLASSES = ("PPP", "PPD", "PPN", "PDD", "PDN", "DDD", "DDN", "PNN", "DNN", "NNN")
TABLE1_GOLDEN = {
    "PPP": Fraction(3),
    "PPD": Fraction(9, 4),
    "PPN": Fraction(2),
    "PDD": Fraction(9, 5),
    "PDN": Fraction(3, 2),
    "DDD": Fraction(18, 11),
    "DDN": Fraction(4, 3),
    "PNN": Fraction(1),
    "DNN": Fraction(1),
    "NNN": Fraction(1),
}


class RegionTooLargeError(ValueError):
    pass


class VertexEnumerationError(ValueError):
    pass


class UnboundedLPError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Inequality:
    """``coefficients . d <= rhs``."""

    coefficients: tuple[Fraction, ...]
    rhs: Fraction = Fraction(1)
    family: str = ""

    def value(self, point: Sequence[Fraction]) -> Fraction:
        return sum((a * x for a, x in zip(self.coefficients, point)), Fraction(0))

    def holds(self, point: Sequence[Fraction]) -> bool:
        return self.value(point) <= self.rhs

    def describe(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"d{j + 1}" for j in range(len(self.coefficients))]
        terms = []
        for a, name in zip(self.coefficients, names):
            if a == 0:
                continue
            terms.append(name if a == 1 else f"{name}/{a.denominator}" if a.numerator == 1 else f"{a}*{name}")
        return " + ".join(terms or ["0"]) + f" <= {self.rhs}"


def _halves(count: int) -> list[Fraction]:
    return [Fraction(1, 2 ** (j + 1)) for j in range(count)]


def _harmonic(count: int) -> list[Fraction]:
    return [Fraction(1, j + 1) for j in range(count)]


@dataclass(frozen=True)
class DofRegion:
    config: CsitConfig

    @property
    def k(self) -> int:
        return self.config.k

    @property
    def exact(self) -> bool:
        """True when the families describe the region itself (three receivers)."""
        return self.k == 3

    @property
    def label(self) -> str:
        if self.k == 3:
            return "exact region (k=3)"
        text = "outer bound (general k)"
        if len(self.config.D) == 1:
            text += "; sum-DoF exact (|D|=1)"
        return text

    def _base(self) -> list[Fraction]:
        c = [Fraction(0)] * self.k
        for j in self.config.N:
            c[j] = Fraction(1)
        return c

    def _idb(self, i: int, order: Sequence[int]) -> Inequality:
        c = self._base()
        for j, w in zip(order, _halves(len(order))):
            c[j] = w
        c[i] = Fraction(1)
        return Inequality(tuple(c), Fraction(1), "idb")

    def _mat(self, order: Sequence[int]) -> Inequality:
        c = self._base()
        for j in self.config.P:
            c[j] = Fraction(1, self.k)
        for j, w in zip(order, _harmonic(len(order))):
            c[j] = w
        return Inequality(tuple(c), Fraction(1), "mat")

    def _nsum(self, i: int) -> Inequality:
        c = self._base()
        c[i] = Fraction(1)
        return Inequality(tuple(c), Fraction(1), "nsum")

    def iter_families(self) -> Iterable[Inequality]:
        P, D = self.config.P, self.config.D
        active = sorted(P + D)
        for i in D:
            rest = [j for j in active if j != i]
            for order in permutations(rest):
                yield self._idb(i, order)
        for order in permutations(D):
            yield self._mat(order)
        for i in active:
            yield self._nsum(i)

    @cached_property
    def inequalities(self) -> tuple[Inequality, ...]:
        """All emitted inequalities (no box), duplicates removed, first tag kept."""
        if self.k > MAX_LISTED_K:
            raise RegionTooLargeError(f"listing the permutation families is capped at k={MAX_LISTED_K}")
        seen: dict[tuple[Fraction, ...], Inequality] = {}
        for ineq in self.iter_families():
            seen.setdefault(ineq.coefficients, ineq)
        return tuple(seen.values())

    def box(self) -> tuple[Inequality, ...]:
        out = []
        for j in range(self.k):
            e = [Fraction(0)] * self.k
            e[j] = Fraction(1)
            out.append(Inequality(tuple(e), Fraction(1), "box"))
            e = [Fraction(0)] * self.k
            e[j] = Fraction(-1)
            out.append(Inequality(tuple(e), Fraction(0), "box"))
        return tuple(out)

    def most_violated(self, point: Sequence[Fraction]) -> Inequality | None:
        """Family member with the largest left side, if that side exceeds 1.

        Uses sorting instead of enumerating permutations: pairing the largest
        coordinates with the largest weights maximizes a weighted sum.
        """
        x = [Fraction(v) for v in point]
        P, D = self.config.P, self.config.D
        active = sorted(P + D)
        best: Inequality | None = None
        best_val = Fraction(1)

        def consider(ineq: Inequality) -> None:
            nonlocal best, best_val
            v = ineq.value(x)
            if v > best_val:
                best, best_val = ineq, v

        for i in D:
            rest = sorted((j for j in active if j != i), key=lambda j: (-x[j], j))
            consider(self._idb(i, rest))
        consider(self._mat(sorted(D, key=lambda j: (-x[j], j))))
        for i in active:
            consider(self._nsum(i))
        return best

    def contains(self, point: Sequence[Fraction]) -> bool:
        if len(point) != self.k:
            raise ValueError("point has the wrong dimension")
        if any(not 0 <= Fraction(v) <= 1 for v in point):
            return False
        return self.most_violated(point) is None

    def maximize(self, objective: Sequence[Fraction]) -> tuple[Fraction, tuple[Fraction, ...]]:
        """Exact LP maximum of ``objective . d`` over the region (cutting planes)."""
        obj = [Fraction(c) for c in objective]
        if any(c < 0 for c in obj):
            raise ValueError("objective weights must be nonnegative")
        cuts: list[Inequality] = [self._nsum(i) for i in sorted(self.config.P + self.config.D)]
        if self.config.N and not (self.config.P or self.config.D):
            cuts.append(self._mat(()))
        while True:
            A = [list(c.coefficients) for c in cuts] + [
                [Fraction(1) if a == j else Fraction(0) for a in range(self.k)] for j in range(self.k)
            ]
            b = [c.rhs for c in cuts] + [Fraction(1)] * self.k
            value, x = simplex_max(obj, A, b)
            cut = self.most_violated(x)
            if cut is None:
                return value, tuple(x)
            if cut in cuts:
                raise ArithmeticError("separation returned an inequality already in the LP")
            cuts.append(cut)


def build_region(config: CsitConfig | str) -> DofRegion:
    if isinstance(config, str):
        config = CsitConfig.parse(config)
    if config.k < 1:
        raise ValueError("need at least one receiver")
    return DofRegion(config)


def simplex_max(c: Sequence[Fraction], A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]
                ) -> tuple[Fraction, list[Fraction]]:
    """Maximize c.x subject to A x <= b, x >= 0, with b >= 0 (origin feasible).

    Dense tableau over Fractions with Bland's rule, so it cannot cycle.
    """
    m, n = len(A), len(c)
    if any(bi < 0 for bi in b):
        raise ValueError("simplex_max needs b >= 0")
    width = n + m + 1
    T = []
    for i in range(m):
        row = [Fraction(a) for a in A[i]] + [Fraction(0)] * m + [Fraction(b[i])]
        row[n + i] = Fraction(1)
        T.append(row)
    z = [-Fraction(x) for x in c] + [Fraction(0)] * (m + 1)
    basis = [n + i for i in range(m)]
    while True:
        enter = next((j for j in range(width - 1) if z[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            raise UnboundedLPError("objective is unbounded")
        prow = T[leave]
        p = prow[enter]
        prow = [v / p for v in prow]
        T[leave] = prow
        for i in range(m):
            if i != leave and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [u - f * v for u, v in zip(T[i], prow)]
        f = z[enter]
        z = [u - f * v for u, v in zip(z, prow)]
        basis[leave] = enter
    x = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = T[i][-1]
    return z[-1], x


def _solve_square(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Gauss-Jordan solve; None when singular."""
    size = len(A)
    M = [row[:] + [bi] for row, bi in zip(A, b)]
    for c in range(size):
        piv = next((i for i in range(c, size) if M[i][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        p = M[c][c]
        M[c] = [v / p for v in M[c]]
        for i in range(size):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [u - f * v for u, v in zip(M[i], M[c])]
    return [M[i][-1] for i in range(size)]


def prune_dominated(inequalities: Iterable[Inequality]) -> list[Inequality]:
    """Drop inequalities implied by another one or by the box.

    With d >= 0 and a common right side of 1, ``a.d <= 1`` follows from
    ``b.d <= 1`` whenever a <= b entrywise, and from the box when sum(a) <= 1.
    """
    items = [q for q in inequalities if sum(q.coefficients) > q.rhs]
    keep = []
    for a in items:
        dominated = any(
            b is not a and b.rhs == a.rhs and b.coefficients != a.coefficients
            and all(x <= y for x, y in zip(a.coefficients, b.coefficients))
            for b in items
        )
        if not dominated:
            keep.append(a)
    return keep


def vertices(region: DofRegion) -> list[tuple[Fraction, ...]]:
    """All extreme points of the region, sorted lexicographically (k <= 4)."""
    k = region.k
    if k > MAX_VERTEX_K:
        raise VertexEnumerationError(f"vertex enumeration unsupported above k={MAX_VERTEX_K}")
    cons = prune_dominated(region.inequalities) + list(region.box())
    subsets = list(combinations(range(len(cons)), k))
    if not subsets:
        return []
    # Float screen: only subsets whose solution is clearly infeasible are dropped;
    # near-singular systems and every survivor go through the exact path.
    A = np.array([[float(a) for a in q.coefficients] for q in cons])
    b = np.array([float(q.rhs) for q in cons])
    idx = np.array(subsets)
    blocks = A[idx]
    dets = np.linalg.det(blocks)
    regular = np.abs(dets) > 1e-9
    xs = np.zeros((len(subsets), k))
    xs[regular] = np.linalg.solve(blocks[regular], b[idx[regular]][..., None])[..., 0]
    slack = (xs @ A.T - b).max(axis=1)
    candidates = np.nonzero(~regular | (slack <= 1e-6))[0]
    found: set[tuple[Fraction, ...]] = set()
    # Regular systems with the same rounded float solution share one exact solve;
    # the others are confirmed by checking their equations at that point, which
    # is exact because a regular system has a unique solution.
    solved: dict[tuple, tuple[Fraction, ...] | None] = {}
    for i in candidates:
        subset = [cons[c] for c in subsets[i]]
        key = tuple(np.round(xs[i], 9)) if regular[i] else None
        if key is not None and key in solved:
            x = solved[key]
            if x is not None and all(q.value(x) == q.rhs for q in subset):
                continue
        x = _solve_square([list(q.coefficients) for q in subset], [q.rhs for q in subset])
        if x is None:
            continue
        x = tuple(x)
        if key is not None:
            solved.setdefault(key, x)
        if x not in found and all(q.value(x) <= q.rhs for q in cons):
            found.add(x)
    out = []
    for v in found:
        active = [q.coefficients for q in cons if q.value(v) == q.rhs]
        if rank(RationalMatrix(active, cols=k)) == k:
            out.append(v)
    return sorted(out)


def facets(region: DofRegion, include_box: bool = False) -> list[Inequality]:
    """Emitted inequalities that define facets (tight on k affinely independent vertices)."""
    verts = vertices(region)
    k = region.k
    if include_box:
        pool = list(region.inequalities) + [
            q for q in region.box() if all(q.coefficients != e.coefficients for e in region.inequalities)
        ]
    else:
        pool = [q for q in region.inequalities if sorted(q.coefficients)[:-1] != [0] * (k - 1)]
    out = []
    for q in pool:
        tight = [list(v) + [Fraction(1)] for v in verts if q.value(v) == q.rhs]
        if tight and rank(RationalMatrix(tight, cols=k + 1)) == k:
            out.append(q)
    return out


def sumdof(region: DofRegion, method: str = "auto") -> Fraction:
    """Exact maximum of the coordinate sum over the region.

    ``method`` is ``"vertices"`` (k <= 4), ``"simplex"`` or ``"auto"``.
    """
    if method == "auto":
        method = "vertices" if region.k <= MAX_VERTEX_K else "simplex"
    if method == "vertices":
        return max(sum(v, Fraction(0)) for v in vertices(region))
    if method == "simplex":
        return region.maximize([Fraction(1)] * region.k)[0]
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class ClosedFormBounds:
    size_p: int
    size_d: int
    lower: Fraction
    upper: Fraction
    cap: Fraction = field(default=Fraction(0))

    @property
    def gap(self) -> Fraction:
        return self.upper - self.lower


def closed_form_bounds(size_p: int, size_d: int) -> ClosedFormBounds:
    """Zero-forcing lower bound and averaged-permutation upper bound, no N receivers.

    lower = |P|, upper = |P| + |D| / (2^|P| + 1 - 1/2^(|D|-1)); the gap is at
    most |P| / 2^|P| <= 1/2. With no D receivers both bounds equal |P|.
    """
    if size_p < 0 or size_d < 0:
        raise ValueError("set sizes must be nonnegative")
    lower = Fraction(size_p)
    cap = Fraction(size_p, 2 ** size_p) if size_p else Fraction(0)
    if size_d == 0:
        return ClosedFormBounds(size_p, size_d, lower, lower, cap)
    if size_p < size_d:
        raise ValueError(f"the closed-form bounds require |P| >= |D| >= 1 (got |P|={size_p}, |D|={size_d})")
    upper = lower + Fraction(size_d) / (2 ** size_p + 1 - Fraction(1, 2 ** (size_d - 1)))
    return ClosedFormBounds(size_p, size_d, lower, upper, cap)


def single_delayed_sumdof(size_p: int) -> Fraction:
    """Sum-DoF with |P| instantaneous receivers and one delayed one: |P| + 1/2^|P|."""
    if size_p < 0:
        raise ValueError("|P| must be nonnegative")
    return size_p + Fraction(1, 2 ** size_p)


def averaged_inequality(size_p: int, size_d: int) -> Inequality:
    """Average of the idb family over joint reorderings, for config P..PD..D.

    P coordinates get (1 - 2^-|P|)/|P|, D coordinates get
    (1 + 2^-|P| - 2^-(|P|+|D|-1))/|D|.
    """
    if size_d < 1:
        raise ValueError("need at least one D receiver")
    wp = (1 - Fraction(1, 2 ** size_p)) / size_p if size_p else Fraction(0)
    wd = (1 + Fraction(1, 2 ** size_p) - Fraction(1, 2 ** (size_p + size_d - 1))) / size_d
    return Inequality(tuple([wp] * size_p + [wd] * size_d), Fraction(1), "averaged")


def region_config(size_p: int, size_d: int, size_n: int = 0) -> CsitConfig:
    return CsitConfig.parse("P" * size_p + "D" * size_d + "N" * size_n)


@dataclass(frozen=True)
class Table1Row:
    csit: str
    facets: tuple[Inequality, ...]
    sumdof: Fraction
    golden: Fraction

    @property
    def matches(self) -> bool:
        return self.sumdof == self.golden


def table1_report() -> dict[str, Table1Row]:
    """Nonredundant region description and sum-DoF for the ten 3-user classes."""
    out = {}
    for name in TABLE1_CLASSES:
        reg = build_region(name)
        out[name] = Table1Row(name, tuple(facets(reg)), sumdof(reg), TABLE1_GOLDEN[name])
    return out


def upgrade_pairs(k: int = 3) -> list[tuple[CsitConfig, CsitConfig]]:
    """All (weaker, stronger) config pairs differing by one N->D or D->P step."""
    step = {CsitState.N: CsitState.D, CsitState.D: CsitState.P}
    pairs = []
    for states in product(list(CsitState), repeat=k):
        for j, s in enumerate(states):
            if s in step:
                up = list(states)
                up[j] = step[s]
                pairs.append((CsitConfig(tuple(states)), CsitConfig(tuple(up))))
    return pairs
