from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from doflab.exactlin import (
    DegenerateInputError,
    RationalMatrix,
    RowSpace,
    as_scalar,
    bareiss_rank,
    conditional_rank,
    coordinate_intersection_dim,
    format_rational,
    hstack,
    integer_rows,
    nullspace_rows,
    orthogonal_complement,
    parse_rational,
    rank,
    rref,
    vstack,
)


def sympy_rank(M: RationalMatrix) -> int:
    return sympy.Matrix(M.rows, M.cols, [sympy.Rational(x.numerator, x.denominator)
                                         for x in map(Fraction, M.entries)]).rank()


def random_matrix(rng, rows, cols, lo=-5, hi=5, den=False):
    data = []
    for _ in range(rows):
        row = []
        for _ in range(cols):
            num = int(rng.integers(lo, hi + 1))
            row.append(Fraction(num, int(rng.integers(1, 7))) if den else num)
        data.append(row)
    return RationalMatrix(data, cols)


small_fracs = st.fractions(min_value=-6, max_value=6, max_denominator=5)


@st.composite
def matrices(draw, max_rows=5, max_cols=5):
    r = draw(st.integers(0, max_rows))
    c = draw(st.integers(1, max_cols))
    data = [[draw(small_fracs) for _ in range(c)] for _ in range(r)]
    return RationalMatrix(data, c)


@st.composite
def low_rank(draw):
    # product of thin factors so that rank deficiency is common
    r, c, inner = draw(st.integers(1, 5)), draw(st.integers(1, 5)), draw(st.integers(1, 3))
    A = RationalMatrix([[draw(small_fracs) for _ in range(inner)] for _ in range(r)], inner)
    B = RationalMatrix([[draw(small_fracs) for _ in range(c)] for _ in range(inner)], c)
    return A @ B


class TestScalars:
    def test_normalizes_integral_fractions(self):
        assert type(as_scalar(Fraction(4, 2))) is int
        assert as_scalar("3/6") == Fraction(1, 2)

    @pytest.mark.parametrize("bad", [0.5, True, None])
    def test_rejects_inexact(self, bad):
        with pytest.raises(TypeError):
            as_scalar(bad)

    def test_round_trip_text(self):
        for x in (Fraction(-7, 3), 0, 5, Fraction(1, 8)):
            assert parse_rational(format_rational(x, always_denominator=True)) == x
        assert format_rational(Fraction(9, 4)) == "9/4"
        assert format_rational(3, always_denominator=True) == "3/1"


class TestMatrix:
    def test_shape_and_products(self):
        A = RationalMatrix([[1, 2], [3, 4]])
        I = RationalMatrix.identity(2)
        assert A @ I == A
        assert (A @ A).row(0) == (7, 10)
        assert A.T.row(0) == (1, 3)
        assert (A + A).row(1) == (6, 8)

    def test_mismatched_stack_raises(self):
        with pytest.raises(ValueError):
            hstack(RationalMatrix.zeros(2, 1), RationalMatrix.zeros(3, 1))
        with pytest.raises(ValueError):
            vstack(RationalMatrix.zeros(1, 2), RationalMatrix.zeros(1, 3))
        with pytest.raises(ValueError):
            RationalMatrix([[1, 2], [3]])

    def test_hashable_and_immutable_equality(self):
        a = RationalMatrix([[Fraction(1, 2), 2]])
        b = RationalMatrix([["1/2", "2"]])
        assert a == b and hash(a) == hash(b)
        assert len({a, b}) == 1

    def test_to_strings(self):
        assert RationalMatrix([[Fraction(-1, 3), 2]]).to_strings() == [["-1/3", "2/1"]]


class TestRank:
    def test_known_ranks(self):
        assert rank(RationalMatrix([[1, 2], [2, 4]])) == 1
        assert rank(RationalMatrix.identity(4)) == 4
        assert rank(RationalMatrix.zeros(3, 3)) == 0
        assert rank(RationalMatrix.zeros(0, 3)) == 0

    @pytest.mark.parametrize("seed", range(1, 7))
    def test_matches_sympy_on_random(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(20):
            r, c = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            M = random_matrix(rng, r, c, -2, 2, den=bool(seed % 2))
            assert rank(M) == sympy_rank(M)

    @settings(max_examples=150, deadline=None)
    @given(low_rank())
    def test_low_rank_products(self, M):
        assert rank(M) == sympy_rank(M)

    @settings(max_examples=100, deadline=None)
    @given(matrices())
    def test_transpose_invariant(self, M):
        assert rank(M) == rank(M.T)

    def test_integer_scaling_preserves_rank(self):
        rows = [(Fraction(1, 2), Fraction(1, 3)), (3, 2)]
        ints = integer_rows(rows)
        assert all(isinstance(x, int) for row in ints for x in row)
        assert bareiss_rank(ints, 2) == 1

    def test_large_entries_stay_exact(self):
        # Vandermonde on distinct nodes is full rank; floats lose this at this size
        nodes = list(range(2, 14))
        M = RationalMatrix([[x ** p for p in range(12)] for x in nodes])
        assert rank(M) == 12
        assert np.linalg.matrix_rank(np.array(M.row_tuples(), dtype=float)) < 12


class TestSubspaces:
    @settings(max_examples=100, deadline=None)
    @given(matrices())
    def test_nullspace_dimension_and_orthogonality(self, M):
        ns = nullspace_rows(M)
        assert len(ns) == M.cols - rank(M)
        for v in ns:
            assert all(isinstance(x, int) for x in v)
            for row in M.row_tuples():
                assert sum(Fraction(a) * b for a, b in zip(row, v)) == 0

    def test_nullspace_matches_sympy_span(self):
        M = RationalMatrix([[1, 2, 3, 4], [2, 4, 6, 8], [0, 1, 1, 1]])
        ours = RationalMatrix(nullspace_rows(M), 4)
        theirs = sympy.Matrix([[1, 2, 3, 4], [2, 4, 6, 8], [0, 1, 1, 1]]).nullspace()
        stacked = vstack(ours, RationalMatrix([[Fraction(int(x.p), int(x.q)) for x in v] for v in theirs], 4))
        assert rank(ours) == rank(stacked) == 2

    def test_rref_pivots(self):
        R, pivots = rref(RationalMatrix([[2, 4, 2], [1, 2, 3]]))
        assert list(pivots) == [0, 2]
        assert tuple(R[0]) == (1, 2, 0)

    def test_complement_requires_full_row_rank(self):
        with pytest.raises(DegenerateInputError, match="not full row rank"):
            orthogonal_complement(RationalMatrix([[1, 1], [2, 2]]))

    def test_complement_of_single_row(self):
        C = orthogonal_complement(RationalMatrix([[1, 2, 3]]))
        assert C.rows == 2
        assert rank(vstack(C, RationalMatrix([[1, 2, 3]]))) == 3

    def test_conditional_rank(self):
        A = RationalMatrix([[1, 0, 0], [0, 1, 0]])
        B = RationalMatrix([[1, 1, 0]])
        assert conditional_rank(A, B) == 1
        assert conditional_rank(B, A) == 0

    def test_coordinate_intersection(self):
        # row space of M meets {x : x_2 = 0} in span{(1,0,0)}
        M = RationalMatrix([[1, 0, 0], [0, 1, 1]])
        assert coordinate_intersection_dim(M, [2]) == 1
        assert coordinate_intersection_dim(M, [0, 2]) == 0
        assert coordinate_intersection_dim(M, []) == 2

    def test_rowspace_incremental(self):
        space = RowSpace(3)
        assert space.add((1, 2, 3))
        assert not space.add((2, 4, 6))
        assert space.contains((Fraction(1, 2), 1, Fraction(3, 2)))
        assert space.add((0, 0, 1))
        assert space.dim == 2
        assert not space.contains((0, 1, 0))
