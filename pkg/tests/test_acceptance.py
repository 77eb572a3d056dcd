"""Acceptance checks, one test per criterion.

Each test records a single ``PASS``/``FAIL`` line in ``RESULTS``; the lines are
printed in the terminal summary by ``conftest.py`` and also when this file is
run directly (``python tests/test_acceptance.py``).
"""

from __future__ import annotations

import sys
import time
from fractions import Fraction as F
from itertools import product

from doflab.channel import CsitConfig, sample_channel, slot_is_generic
from doflab.cli import main as cli_main
from doflab.region import (
    build_region,
    closed_form_bounds,
    region_config,
    single_delayed_sumdof,
    table1_report,
    vertices,
)
from doflab.schemes import (
    PDD,
    KUserD1Policy,
    PddPolicy,
    achieved_dof,
    kuser_d1_scheme,
    pdd_scheme,
    zero_forcing_scheme,
)
from doflab.lemmalab import run_suite
from doflab.strategy import assemble, check_decodability, validate_csit_compliance

RESULTS: dict[int, str] = {}

# Exact sum-DoF of the ten 3-user classes, transcribed from the source table.
TABLE_ONE = {"PPP": F(3), "PPD": F(9, 4), "PPN": F(2), "PDD": F(9, 5), "PDN": F(3, 2),
             "DDD": F(18, 11), "DDN": F(4, 3), "PNN": F(1), "DNN": F(1), "NNN": F(1)}

# Non-trivial extreme points exactly as listed in the source table, including
# (0, 1, 1/2) under PDD.
TABLE_TWO = {
    "PPD": [(1, 0, F(1, 2)), (0, 1, F(1, 2)), (1, 1, F(1, 4))],
    "PDD": [(1, 0, F(1, 2)), (0, 1, F(1, 2)), (1, F(2, 5), F(2, 5)), (F(3, 4), F(1, 2), F(1, 2)),
            (0, F(2, 3), F(2, 3))],
    "PDN": [(1, F(1, 2), 0)],
    "DDD": [(F(2, 3), F(2, 3), 0), (F(2, 3), 0, F(2, 3)), (0, F(2, 3), F(2, 3)), (F(6, 11),) * 3],
    "DDN": [(F(2, 3), F(2, 3), 0)],
}


def record(n: int, title: str, ok: bool, detail: str, elapsed: float) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}; {elapsed:.2f}s]"
    RESULTS[n] = line
    print(line)


def fmt(v) -> str:
    return "(" + ", ".join(str(F(x)) for x in v) + ")"


def test_criterion_1_table_one():
    start = time.perf_counter()
    report = table1_report()
    wrong = [f"{k}={report[k].sumdof}" for k in TABLE_ONE if report[k].sumdof != TABLE_ONE[k]]
    cli_code = cli_main(["table1", "--format", "csv", "--out", "/dev/null"])
    elapsed = time.perf_counter() - start
    ok = not wrong and cli_code == 0 and elapsed < 5
    detail = "10/10 exact" if not wrong else "mismatch " + ", ".join(wrong)
    record(1, "3-user sum-DoF table", ok, f"{detail}, cli exit {cli_code}", elapsed)
    assert ok


def test_criterion_2_table_two():
    start = time.perf_counter()
    missing = []
    listed = 0
    for name, points in TABLE_TWO.items():
        vs = set(vertices(build_region(name)))
        for p in points:
            listed += 1
            if tuple(F(x) for x in p) not in vs:
                missing.append(f"{name} {fmt(p)}")
    elapsed = time.perf_counter() - start
    ok = not missing and elapsed < 10
    detail = f"{listed - len(missing)}/{listed} listed points are vertices"
    if missing:
        detail += "; not vertices: " + ", ".join(missing)
    record(2, "listed non-trivial extreme points", ok, detail, elapsed)
    assert ok, detail


def test_criterion_3_pdd_scheme():
    start = time.perf_counter()
    good = 0
    for seed in range(20):
        ch = sample_channel(3, 3, 4, seed)
        s = pdd_scheme(ch)
        decodable = s.symbols == (3, 2, 2) and s.n == 4 and all(
            r.achieved for r in check_decodability(assemble(s, ch)))
        compliant = validate_csit_compliance(lambda r, _: PddPolicy(), PDD, ch, seed)
        good += decodable and compliant
    elapsed = time.perf_counter() - start
    ok = good == 20
    record(3, "PDD scheme (3,2,2) over n=4", ok, f"{good}/20 decodable and compliant", elapsed)
    assert ok


def test_criterion_4_kuser_scheme():
    start = time.perf_counter()
    good = total = 0
    for K in (2, 3, 4, 5):
        n = 2 ** (K - 1)
        for seed in range(20):
            total += 1
            ch = sample_channel(K, K, n, seed)
            s = kuser_d1_scheme(K, ch)
            ok_dims = s.symbols == (n,) * (K - 1) + (1,) and s.n == n
            decodable = all(r.achieved for r in check_decodability(assemble(s, ch)))
            exact = sum(achieved_dof(s)) == (K - 1) + F(1, n) == single_delayed_sumdof(K - 1)
            good += ok_dims and decodable and exact
    elapsed = time.perf_counter() - start
    ok = good == total and elapsed < 60
    record(4, "K-user single-delayed scheme, K=2..5", ok, f"{good}/{total} runs exact", elapsed)
    assert ok


def _inside(region, point) -> bool:
    # both the listed inequalities and the separation oracle must agree
    listed = all(q.holds(point) for q in region.inequalities) and all(0 <= x <= 1 for x in point)
    return listed and region.contains(point)


def test_criterion_5_converse_consistency():
    start = time.perf_counter()
    checked, outside = 0, []
    for k in (3, 4):
        for states in product("PDN", repeat=k):
            cfg = CsitConfig.parse("".join(states))
            if not cfg.P:
                continue
            ch = sample_channel(k, k, 2, seed=k)
            dof = achieved_dof(zero_forcing_scheme(cfg, ch))
            checked += 1
            if not _inside(build_region(cfg), dof):
                outside.append(f"zf {cfg} {fmt(dof)}")
    checked += 1
    pdd = achieved_dof(pdd_scheme(sample_channel(3, 3, 4, 0)))
    if not _inside(build_region(PDD), pdd):
        outside.append(f"pdd {fmt(pdd)}")
    for K in (2, 3, 4, 5):
        checked += 1
        policy = KUserD1Policy(K)
        dof = achieved_dof(kuser_d1_scheme(K, sample_channel(K, K, policy.n, 0)))
        if not _inside(build_region(policy.config), dof):
            outside.append(f"kuser {K} {fmt(dof)}")
    lp_bad = [p for p in range(1, 7)
              if build_region(region_config(p, 1)).maximize([1] * (p + 1))[0] != single_delayed_sumdof(p)]
    elapsed = time.perf_counter() - start
    ok = not outside and not lp_bad
    detail = f"{checked - len(outside)}/{checked} scheme tuples inside; LP = closed form for |P|=1..6"
    if outside or lp_bad:
        detail += f"; outside {outside}; LP mismatch at |P| in {lp_bad}"
    record(5, "achieved DoF inside the outer bound", ok, detail, elapsed)
    assert ok


CRITERION_6_CONFIGS = list(TABLE_ONE) + ["PPDD", "PPPDD"]


def test_criterion_6_lemma_suite():
    start = time.perf_counter()
    violations, lines = 0, 0
    for name in CRITERION_6_CONFIGS:
        rep = run_suite(name, trials=100, seed=0)
        violations += rep.violation_count
        lines += len(rep.tallies)
        assert all(t.trials == 100 for t in rep.tallies)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 300
    record(6, "lemma suite, 100 trials per lemma, kind and config", ok,
           f"{violations} violations over {lines} lemma/kind/config cells", elapsed)
    assert ok


def test_criterion_7_gap():
    start = time.perf_counter()
    bad = []
    worst = F(0)
    for p in range(1, 6):
        for d in range(1, p + 1):
            b = closed_form_bounds(p, d)
            lp = build_region(region_config(p, d)).maximize([1] * (p + d))[0]
            worst = max(worst, b.gap)
            if not (b.lower <= lp <= b.upper and b.gap <= F(1, 2) and b.lower == p):
                bad.append((p, d, lp))
    elapsed = time.perf_counter() - start
    ok = not bad
    record(7, "closed-form bounds bracket the LP, gap <= 1/2", ok,
           f"15/15 pairs bracketed, largest gap {worst}" if ok else f"failures {bad}", elapsed)
    assert ok


def test_criterion_8_nothing_excluded():
    start = time.perf_counter()
    # the only substitution: exact generic rational channels instead of continuous ones
    ch = sample_channel(4, 4, 6, seed=0)
    exact = all(isinstance(x, (int, F)) for t in range(6) for j in range(4) for x in ch.g(j, t))
    generic = all(slot_is_generic([ch.g(j, t) for j in range(4)], 4, 4) for t in range(6))
    elapsed = time.perf_counter() - start
    ok = exact and generic
    record(8, "no criterion excluded; channels exact and generic", ok,
           "integer channel draws with every antenna minor nonzero", elapsed)
    assert ok


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    print(f"{len(tests) - failed}/{len(tests)} criteria pass")
    sys.exit(1 if failed else 0)
