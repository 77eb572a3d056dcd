"""Exact rational dense linear algebra.

Entries are Python ints or :class:`fractions.Fraction` values kept in lowest
terms; a fraction with denominator one is stored as a plain int so that the
all-integer matrices produced by channel sampling stay on the fast path.
Ranks use fraction-free (Bareiss) elimination on integer-scaled rows.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from numbers import Integral, Rational
from typing import Iterable, Sequence, Union

Scalar = Union[int, Fraction]


class DegenerateInputError(ValueError):
    """Raised when an operation needs a full-row-rank input and gets less."""


def as_scalar(x: object) -> Scalar:
    """Convert ``x`` to an exact scalar (int or reduced Fraction).

    Floats are rejected on purpose: every value in this package is exact.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not matrix entries")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, Integral):
        return int(x)
    if isinstance(x, Rational):
        return as_scalar(Fraction(x.numerator, x.denominator))
    if isinstance(x, str):
        return as_scalar(Fraction(x))
    raise TypeError(f"cannot use {type(x).__name__} as an exact entry")


def format_rational(x: object, *, always_denominator: bool = False) -> str:
    """Render an exact value as ``"p/q"`` (or ``"p"`` for integers)."""
    f = Fraction(as_scalar(x))
    if f.denominator == 1 and not always_denominator:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def parse_rational(text: str) -> Scalar:
    return as_scalar(Fraction(text.strip()))


class RationalMatrix:
    """Immutable exact matrix; 0-row and 0-column shapes are allowed."""

    __slots__ = ("rows", "cols", "_data", "_hash")

    def __init__(self, data: Iterable[Iterable[object]] = (), cols: int | None = None):
        body = tuple(tuple(as_scalar(x) for x in row) for row in data)
        if cols is None:
            if not body:
                raise ValueError("column count required for a matrix with no rows")
            cols = len(body[0])
        for row in body:
            if len(row) != cols:
                raise ValueError("ragged rows")
        self.rows = len(body)
        self.cols = cols
        self._data = body
        self._hash: int | None = None

    @classmethod
    def _trusted(cls, body: tuple[tuple[Scalar, ...], ...], cols: int) -> "RationalMatrix":
        obj = cls.__new__(cls)
        obj.rows = len(body)
        obj.cols = cols
        obj._data = body
        obj._hash = None
        return obj

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls._trusted(tuple((0,) * cols for _ in range(rows)), cols)

    @classmethod
    def identity(cls, size: int) -> "RationalMatrix":
        body = tuple(tuple(1 if i == j else 0 for j in range(size)) for i in range(size))
        return cls._trusted(body, size)

    @classmethod
    def from_flat(cls, rows: int, cols: int, entries: Sequence[object]) -> "RationalMatrix":
        if len(entries) != rows * cols:
            raise ValueError("entries length must equal rows * cols")
        return cls((entries[i * cols:(i + 1) * cols] for i in range(rows)), cols=cols)

    @classmethod
    def row_vector(cls, values: Sequence[object]) -> "RationalMatrix":
        return cls([values], cols=len(values))

    @classmethod
    def column_vector(cls, values: Sequence[object]) -> "RationalMatrix":
        return cls(([v] for v in values), cols=1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def entries(self) -> tuple[Scalar, ...]:
        """Row-major flat view of the entries."""
        return tuple(x for row in self._data for x in row)

    def row(self, i: int) -> tuple[Scalar, ...]:
        return self._data[i]

    def row_tuples(self) -> tuple[tuple[Scalar, ...], ...]:
        return self._data

    def __getitem__(self, ij: tuple[int, int]) -> Scalar:
        i, j = ij
        return self._data[i][j]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.cols == other.cols and self._data == other._data

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.cols, self._data))
        return self._hash

    def __repr__(self) -> str:
        body = "; ".join(" ".join(format_rational(x) for x in row) for row in self._data)
        return f"RationalMatrix({self.rows}x{self.cols}: [{body}])"

    def transpose(self) -> "RationalMatrix":
        if self.cols == 0:
            return RationalMatrix.zeros(0, self.rows)
        return RationalMatrix._trusted(tuple(zip(*self._data)), self.rows)

    @property
    def T(self) -> "RationalMatrix":
        return self.transpose()

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        right_cols = tuple(zip(*other._data)) if other.rows else tuple(() for _ in range(other.cols))
        body = tuple(
            tuple(as_scalar(sum(a * b for a, b in zip(row, col))) for col in right_cols)
            for row in self._data
        )
        return RationalMatrix._trusted(body, other.cols)

    def scale(self, factor: object) -> "RationalMatrix":
        f = as_scalar(factor)
        return RationalMatrix._trusted(
            tuple(tuple(as_scalar(f * x) for x in row) for row in self._data), self.cols
        )

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise ValueError(f"cannot add {self.shape} and {other.shape}")
        return RationalMatrix._trusted(
            tuple(
                tuple(as_scalar(a + b) for a, b in zip(r1, r2))
                for r1, r2 in zip(self._data, other._data)
            ),
            self.cols,
        )

    def select_columns(self, indices: Sequence[int]) -> "RationalMatrix":
        idx = list(indices)
        return RationalMatrix._trusted(
            tuple(tuple(row[j] for j in idx) for row in self._data), len(idx)
        )

    def select_rows(self, indices: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix._trusted(tuple(self._data[i] for i in indices), self.cols)

    def is_zero(self) -> bool:
        return all(x == 0 for row in self._data for x in row)

    def to_strings(self) -> list[list[str]]:
        return [[format_rational(x, always_denominator=True) for x in row] for row in self._data]


def hstack(*blocks: RationalMatrix) -> RationalMatrix:
    """Place the blocks side by side (columns of the first come first)."""
    if not blocks:
        raise ValueError("hstack needs at least one block")
    rows = blocks[0].rows
    if any(b.rows != rows for b in blocks):
        raise ValueError("hstack: row counts differ " + str([b.rows for b in blocks]))
    body = tuple(sum((b._data[i] for b in blocks), ()) for i in range(rows))
    return RationalMatrix._trusted(body, sum(b.cols for b in blocks))


def vstack(*blocks: RationalMatrix) -> RationalMatrix:
    """Stack the blocks on top of each other."""
    if not blocks:
        raise ValueError("vstack needs at least one block")
    cols = blocks[0].cols
    if any(b.cols != cols for b in blocks):
        raise ValueError("vstack: column counts differ " + str([b.cols for b in blocks]))
    return RationalMatrix._trusted(sum((b._data for b in blocks), ()), cols)


def _integer_row(row: Sequence[Scalar]) -> list[int]:
    den = 1
    for x in row:
        if isinstance(x, Fraction):
            den = lcm(den, x.denominator)
    if den == 1:
        return list(row)  # type: ignore[arg-type]
    return [int(x * den) for x in row]


def integer_rows(rows: Iterable[Sequence[Scalar]]) -> list[list[int]]:
    """Scale every row by its denominator lcm; row spaces are unchanged."""
    return [_integer_row(r) for r in rows]


def bareiss_rank(rows: list[list[int]], ncols: int) -> int:
    """Rank of an integer matrix by fraction-free elimination.

    ``rows`` is consumed (modified in place).
    """
    a = [r for r in rows if any(r)]
    nrows = len(a)
    rank = 0
    prev = 1
    for c in range(ncols):
        if rank == nrows:
            break
        piv = rank
        while piv < nrows and a[piv][c] == 0:
            piv += 1
        if piv == nrows:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        prow = a[rank]
        p = prow[c]
        for i in range(rank + 1, nrows):
            ri = a[i]
            f = ri[c]
            if f == 0:
                if p != prev:
                    for j in range(c + 1, ncols):
                        ri[j] = (p * ri[j]) // prev
                continue
            for j in range(c + 1, ncols):
                ri[j] = (p * ri[j] - f * prow[j]) // prev
            ri[c] = 0
        prev = p
        rank += 1
    return rank


def rank(M: RationalMatrix) -> int:
    """Exact rank; an empty matrix has rank 0."""
    if M.rows == 0 or M.cols == 0:
        return 0
    if M.rows > M.cols:
        M = M.transpose()
    return bareiss_rank(integer_rows(M.row_tuples()), M.cols)


def rank_of_rows(rows: Sequence[Sequence[Scalar]], ncols: int) -> int:
    """Rank of a bare list of rows without building a matrix object."""
    if not rows or ncols == 0:
        return 0
    return bareiss_rank(integer_rows(rows), ncols)


def rref(M: RationalMatrix) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals.

    Returns the nonzero rows and the pivot column of each.
    """
    a = [[Fraction(x) for x in row] for row in M.row_tuples()]
    pivots: list[int] = []
    r = 0
    for c in range(M.cols):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        a[r] = [x / p for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def _primitive(vec: Sequence[Fraction]) -> tuple[int, ...]:
    den = 1
    for x in vec:
        den = lcm(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g > 1:
        ints = [x // g for x in ints]
    return tuple(ints)


def nullspace_rows(M: RationalMatrix) -> list[tuple[int, ...]]:
    """Basis of {x : M x = 0}, one primitive integer vector per free column."""
    reduced, pivots = rref(M)
    pivot_set = set(pivots)
    basis = []
    for free in range(M.cols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * M.cols
        vec[free] = Fraction(1)
        for row, pc in zip(reduced, pivots):
            vec[pc] = -row[free]
        basis.append(_primitive(vec))
    return basis


def orthogonal_complement(M: RationalMatrix) -> RationalMatrix:
    """Full-row-rank N with ``M @ N.T == 0`` and ``rank(vstack(M, N)) == M.cols``.

    Raises:
        DegenerateInputError: if ``M`` does not have full row rank.
    """
    if rank(M) != M.rows:
        raise DegenerateInputError("degenerate input: matrix is not full row rank")
    return RationalMatrix(nullspace_rows(M), cols=M.cols)


def conditional_rank(A: RationalMatrix, B: RationalMatrix) -> int:
    """rank[A | B] = rank[A; B] - rank[B]."""
    return rank(vstack(A, B)) - rank(B)


def coordinate_intersection_dim(M: RationalMatrix, zero_cols: Iterable[int]) -> int:
    """Dimension of the subspace of rowspan(M) vanishing on ``zero_cols``.

    Works from an explicit basis of the row space: a combination ``y @ basis``
    vanishes on the chosen columns iff ``y`` lies in the left null space of
    the restricted basis, so the answer is that null space's dimension.
    """
    zc = sorted(set(zero_cols))
    if any(c < 0 or c >= M.cols for c in zc):
        raise IndexError("zero column index out of range")
    basis, _ = rref(M)
    if not basis:
        return 0
    restricted = RationalMatrix([[row[c] for c in zc] for row in basis], cols=len(zc))
    # left null space of `restricted` = null space of its transpose
    return len(nullspace_rows(restricted.transpose()))


class RowSpace:
    """Incrementally grown row space with exact membership tests."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self._basis: list[tuple[int, list[int]]] = []  # (pivot column, row)

    @property
    def dim(self) -> int:
        return len(self._basis)

    def _reduce(self, row: Sequence[Scalar]) -> list[int]:
        v = _integer_row(list(row))
        for pc, b in self._basis:
            f = v[pc]
            if f == 0:
                continue
            p = b[pc]
            v = [p * x - f * y for x, y in zip(v, b)]
            g = 0
            for x in v:
                g = gcd(g, x)
            if g > 1:
                v = [x // g for x in v]
        return v

    def contains(self, row: Sequence[Scalar]) -> bool:
        return not any(self._reduce(row))

    def add(self, row: Sequence[Scalar]) -> bool:
        """Add ``row``; return True iff it increased the dimension."""
        v = self._reduce(row)
        pc = next((i for i, x in enumerate(v) if x != 0), None)
        if pc is None:
            return False
        self._basis.append((pc, v))
        return True
