from fractions import Fraction as F
from itertools import permutations

import numpy as np
import pytest
from scipy.optimize import linprog

from doflab.channel import CsitConfig
from doflab.region import (
    TABLE1_CLASSES,
    TABLE1_GOLDEN,
    Inequality,
    VertexEnumerationError,
    averaged_inequality,
    build_region,
    facets,
    closed_form_bounds,
    single_delayed_sumdof,
    prune_dominated,
    region_config,
    simplex_max,
    sumdof,
    table1_report,
    upgrade_pairs,
    vertices,
)

# sum-DoF per 3-user class, copied from the source table
GOLDEN = {"PPP": F(3), "PPD": F(9, 4), "PPN": F(2), "PDD": F(9, 5), "PDN": F(3, 2),
          "DDD": F(18, 11), "DDN": F(4, 3), "PNN": F(1), "DNN": F(1), "NNN": F(1)}


def float_lp(region, objective=None):
    k = region.k
    A = [[float(a) for a in q.coefficients] for q in region.inequalities]
    b = [float(q.rhs) for q in region.inequalities]
    c = [-1.0] * k if objective is None else [-float(x) for x in objective]
    res = linprog(c, A_ub=A or None, b_ub=b or None, bounds=[(0, 1)] * k, method="highs")
    assert res.status == 0
    return -res.fun


def test_golden_table_embedded():
    assert TABLE1_GOLDEN == GOLDEN
    assert list(TABLE1_CLASSES) == list(GOLDEN)


@pytest.mark.parametrize("name", list(GOLDEN))
def test_table1_values(name):
    assert sumdof(build_region(name)) == GOLDEN[name]


@pytest.mark.parametrize("name", list(GOLDEN) + ["PPPD", "PPDD", "PDDD", "DDDD", "PPDN"])
def test_exact_lp_agrees_with_float_solver(name):
    reg = build_region(name)
    exact = sumdof(reg, method="simplex")
    assert abs(float(exact) - float_lp(reg)) < 1e-9
    if reg.k <= 4:
        assert sumdof(reg, method="vertices") == exact


def test_weighted_objectives_agree():
    rng = np.random.default_rng(3)
    reg = build_region("PDD")
    for _ in range(10):
        w = [F(int(x)) for x in rng.integers(0, 6, size=3)]
        val, point = reg.maximize(w)
        assert reg.contains(point)
        assert sum(a * b for a, b in zip(w, point)) == val
        assert abs(float(val) - float_lp(reg, w)) < 1e-9


@pytest.mark.parametrize("name", ["DDP", "DPD", "PDD"])
def test_permutation_invariance(name):
    assert sumdof(build_region(name)) == F(9, 5)


def test_upgrades_never_shrink():
    for lo, hi in upgrade_pairs(3):
        assert sumdof(build_region(lo)) <= sumdof(build_region(hi))


class TestVertices:
    def test_pdd_vertices(self):
        vs = set(vertices(build_region("PDD")))
        assert {(F(3, 4), F(1, 2), F(1, 2)), (0, F(2, 3), F(2, 3)), (1, F(2, 5), F(2, 5)),
                (1, 0, F(1, 2)), (1, F(1, 2), 0)} <= vs

    def test_pdd_listed_point_is_outside(self):
        # (0, 1, 1/2) breaks d1/2 + d2 + d3/4 <= 1; the in-region mirror image is (1, 1/2, 0)
        reg = build_region("PDD")
        assert not reg.contains((0, 1, F(1, 2)))
        idb = next(q for q in reg.inequalities if q.coefficients == (F(1, 2), 1, F(1, 4)))
        assert idb.value((0, 1, F(1, 2))) == F(9, 8)
        assert reg.contains((1, F(1, 2), 0))

    def test_ddd_symmetric_point(self):
        vs = set(vertices(build_region("DDD")))
        assert (F(6, 11),) * 3 in vs
        assert (F(2, 3), F(2, 3), 0) in vs

    def test_vertices_are_feasible_and_tight(self):
        reg = build_region("PPD")
        cons = list(reg.inequalities) + list(reg.box())
        for v in vertices(reg):
            assert reg.contains(v)
            tight = [q.coefficients for q in cons if q.value(v) == q.rhs]
            tight += [tuple(1 if i == j else 0 for i in range(3)) for j in range(3) if v[j] == 0]
            assert np.linalg.matrix_rank(np.array(tight, dtype=float)) == 3

    def test_too_large(self):
        with pytest.raises(VertexEnumerationError):
            vertices(build_region("PPDDD"))


class TestFacets:
    def test_pdd_has_four_nontrivial_facets(self):
        assert len(facets(build_region("PDD"))) == 4

    def test_pnn_region_is_simplex(self):
        fs = facets(build_region("PNN"))
        assert [q.coefficients for q in fs] == [(1, 1, 1)]

    def test_ppp_has_no_facets_beyond_box(self):
        assert facets(build_region("PPP")) == []
        # cube: three upper faces and three coordinate planes
        assert len(facets(build_region("PPP"), include_box=True)) == 6

    def test_report_matches(self):
        assert all(r.matches for r in table1_report().values())


def test_prune_dominated():
    a = Inequality((F(1, 2), 1), 1)
    b = Inequality((F(1, 4), 1), 1)
    assert prune_dominated([a, b]) == [a]


def test_simplex_basic():
    val, x = simplex_max([1, 1], [[1, 2], [3, 1]], [4, 6])
    assert val == F(14, 5) and tuple(x) == (F(8, 5), F(6, 5))


def test_labels():
    assert build_region("PDD").label == "exact region (k=3)"
    assert build_region("PPPD").label == "outer bound (general k); sum-DoF exact (|D|=1)"
    assert build_region("PPDD").label == "outer bound (general k)"


class TestClosedForms:
    def test_single_delayed_sumdofs(self):
        assert [single_delayed_sumdof(p) for p in range(1, 5)] == [F(3, 2), F(9, 4), F(25, 8), F(65, 16)]

    @pytest.mark.parametrize("p", range(1, 7))
    def test_single_delayed_matches_lp(self, p):
        assert sumdof(build_region(region_config(p, 1))) == single_delayed_sumdof(p)

    def test_closed_form_hand_values(self):
        b = closed_form_bounds(2, 2)
        assert (b.lower, b.upper, b.gap) == (2, F(22, 9), F(4, 9))
        assert closed_form_bounds(3, 2).upper == 3 + F(2, 8 + 1 - F(1, 2))

    def test_closed_form_regime(self):
        with pytest.raises(ValueError, match="require"):
            closed_form_bounds(1, 2)
        assert closed_form_bounds(3, 0).lower == closed_form_bounds(3, 0).upper == 3

    def test_averaged_inequality_holds_on_region(self):
        reg = build_region(region_config(2, 2))
        q = averaged_inequality(2, 2)
        assert q.holds(reg.maximize([1, 1, 1, 1])[1])

    def test_region_config(self):
        assert region_config(2, 1, 1) == CsitConfig.parse("PPDN")


@pytest.mark.parametrize("perm", list(permutations(range(3))))
def test_vertex_sets_permute(perm):
    base = vertices(build_region("PDN"))
    cfg = CsitConfig.parse("PDN").permuted(perm)
    moved = {tuple(v[i] for i in perm) for v in base}
    assert moved == set(vertices(build_region(cfg)))
