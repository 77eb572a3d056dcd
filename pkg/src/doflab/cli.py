"""Command-line front end: ``doflab {region,table1,simulate,verify,bounds}``.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 mismatch
against built-in golden data.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .channel import CsitConfig, sample_channel
from .exactlin import format_rational
from .lemmalab import run_suite
from .region import (
    MAX_LISTED_K,
    MAX_VERTEX_K,
    TABLE1_CLASSES,
    build_region,
    closed_form_bounds,
    region_config,
    single_delayed_sumdof,
    sumdof,
    table1_report,
    vertices,
)
from .schemes import (
    PDD,
    KUserD1Policy,
    PddPolicy,
    SchemeError,
    ZeroForcingPolicy,
    achieved_dof,
)
from .strategy import KINDS, assemble, check_decodability, realize, validate_csit_compliance

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_GOLDEN = 0, 1, 2, 3
CONFIG_KEYS = {"csit", "seed", "trials", "format", "k", "p", "d", "n", "out", "dump", "kinds", "audit_trials"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(message)


def fmt(x: Fraction | int) -> str:
    return format_rational(x)


def fmt_text(x: Fraction | int) -> str:
    f = Fraction(x)
    return fmt(f) if f.denominator == 1 else f"{fmt(f)} ({float(f):.4f})"


def fmt_tuple(xs: Sequence[Fraction]) -> str:
    return "(" + ", ".join(fmt(x) for x in xs) + ")"


def read_config_file(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file mirroring the flags (flags win)")
    common.add_argument("--format", choices=("text", "json", "csv"), default=None)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=None, help="default: $DOFLAB_SEED or 0")

    p = _Parser(prog="doflab", description="Linear DoF lab for the MISO broadcast channel with hybrid CSIT.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    r = sub.add_parser("region", parents=[common], help="region inequalities, sum-DoF and vertices")
    r.add_argument("csit_pos", nargs="?", metavar="CSIT")
    r.add_argument("--csit")

    sub.add_parser("table1", parents=[common], help="sum-DoF of the ten 3-user classes")

    s = sub.add_parser("simulate", parents=[common], help="run a scheme and check decodability")
    s.add_argument("scheme", choices=("zf", "pdd", "kuser-d1"))
    s.add_argument("--csit", help="configuration for zf")
    s.add_argument("--K", dest="k", type=int, default=None, help="users for kuser-d1")
    s.add_argument("--n", type=int, default=None, help="block length for zf (default 4)")
    s.add_argument("--dump", help="write the transcript JSON here")
    s.add_argument("--audit-trials", type=int, default=None, help="perturbation trials for the CSIT audit")

    v = sub.add_parser("verify", parents=[common], help="run the lemma suite")
    v.add_argument("csit_pos", nargs="?", metavar="CSIT")
    v.add_argument("--csit")
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--kinds", help="comma-separated generator kinds (default all)")
    v.add_argument("--dump", help="write violating transcripts to this JSON file")

    b = sub.add_parser("bounds", parents=[common], help="closed-form and LP sum-DoF bounds")
    b.add_argument("--P", dest="p", type=int, default=None)
    b.add_argument("--D", dest="d", type=int, default=None)
    return p


def _settings(args: argparse.Namespace) -> dict:
    """Merge flags over config file over environment over defaults."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    env_seed = os.environ.get("DOFLAB_SEED")
    merged: dict = {}

    def pick(name: str, flag, cast=str, default=None):
        if flag is not None:
            return flag
        if name in file_values:
            try:
                return cast(file_values[name])
            except ValueError as exc:
                raise UsageError(f"bad value for {name}: {file_values[name]!r}") from exc
        return default

    try:
        seed_default = int(env_seed) if env_seed not in (None, "") else 0
    except ValueError as exc:
        raise UsageError(f"DOFLAB_SEED must be an integer, got {env_seed!r}") from exc
    merged["seed"] = pick("seed", args.seed, int, seed_default)
    merged["format"] = pick("format", args.format, str, "text")
    if merged["format"] not in ("text", "json", "csv"):
        raise UsageError(f"unknown format {merged['format']!r}")
    merged["out"] = pick("out", args.out)
    csit_flag = getattr(args, "csit_pos", None) or getattr(args, "csit", None)
    merged["csit"] = pick("csit", csit_flag)
    merged["trials"] = pick("trials", getattr(args, "trials", None), int, 100)
    merged["kinds"] = pick("kinds", getattr(args, "kinds", None))
    merged["k"] = pick("k", getattr(args, "k", None), int)
    merged["p"] = pick("p", getattr(args, "p", None), int)
    merged["d"] = pick("d", getattr(args, "d", None), int)
    merged["n"] = pick("n", getattr(args, "n", None), int, 4)
    merged["dump"] = pick("dump", getattr(args, "dump", None))
    merged["audit_trials"] = pick("audit_trials", getattr(args, "audit_trials", None), int, 5)
    return merged


def _config(text: str | None) -> CsitConfig:
    if not text:
        raise UsageError("a CSIT string such as PDD is required")
    try:
        return CsitConfig.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _nontrivial(vs):
    return [v for v in vs if any(x.denominator != 1 for x in v)]


def cmd_region(opts: dict) -> tuple[str, int]:
    config = _config(opts["csit"])
    reg = build_region(config)
    value = sumdof(reg)
    listed = reg.inequalities if reg.k <= MAX_LISTED_K else None
    verts = vertices(reg) if reg.k <= MAX_VERTEX_K else None
    label = reg.label
    if opts["format"] == "json":
        doc = {
            "config": str(config),
            "label": label,
            "sumDof": format_rational(value, always_denominator=True),
            "inequalities": None if listed is None else [
                {"coefficients": [format_rational(a, always_denominator=True) for a in q.coefficients],
                 "rhs": format_rational(q.rhs, always_denominator=True), "family": q.family}
                for q in listed
            ],
            "vertices": None if verts is None else [
                [format_rational(x, always_denominator=True) for x in v] for v in verts
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n", EXIT_OK
    if opts["format"] == "csv":
        rows = [["kind", "family"] + [f"d{j + 1}" for j in range(reg.k)] + ["rhs"]]
        for q in listed or ():
            rows.append(["inequality", q.family] + [fmt(a) for a in q.coefficients] + [fmt(q.rhs)])
        for v in verts or ():
            rows.append(["vertex", ""] + [fmt(x) for x in v] + [""])
        rows.append(["sumdof", ""] + [""] * reg.k + [fmt(value)])
        return _csv(rows), EXIT_OK
    lines = [f"config: {config}", f"label: {label}", "inequalities (plus 0 <= d_j <= 1):"]
    if listed is None:
        lines.append(f"  (not listed above k={MAX_LISTED_K}; LP solved by cutting planes)")
    else:
        lines += [f"  {q.describe()}   [{q.family}]" for q in listed]
    lines.append(f"sum-DoF: {fmt_text(value)}")
    if verts is not None:
        nt = _nontrivial(verts)
        lines.append(f"vertices: {len(verts)} total, {len(nt)} non-trivial")
        lines += [f"  {fmt_tuple(v)}" for v in nt]
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_table1(opts: dict) -> tuple[str, int]:
    report = table1_report()
    code = EXIT_OK if all(r.matches for r in report.values()) else EXIT_GOLDEN
    if opts["format"] == "json":
        doc = {
            "rows": [
                {"config": name, "sumDof": format_rational(r.sumdof, always_denominator=True),
                 "golden": format_rational(r.golden, always_denominator=True), "match": r.matches,
                 "region": [q.describe() for q in r.facets]}
                for name, r in report.items()
            ],
            "allMatch": code == EXIT_OK,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n", code
    if opts["format"] == "csv":
        rows = [["config", "sumdof", "golden", "match"]]
        rows += [[n, fmt(r.sumdof), fmt(r.golden), str(r.matches).lower()] for n, r in report.items()]
        return _csv(rows), code
    lines = []
    for name in TABLE1_CLASSES:
        r = report[name]
        mark = "ok" if r.matches else f"MISMATCH (expected {fmt(r.golden)})"
        region = "; ".join(q.describe() for q in r.facets) or "box only"
        lines.append(f"{name}  sum-DoF {fmt(r.sumdof):>6}  {mark}  region: {region}")
    return "\n".join(lines) + "\n", code


def _run_scheme(name: str, opts: dict):
    """Build the policy and a matching channel; resample on degenerate draws."""
    seed = opts["seed"]
    if name == "pdd":
        config, k, n, make = PDD, 3, 4, (lambda r, s: PddPolicy())
    elif name == "kuser-d1":
        K = opts["k"]
        if K is None or K < 2:
            raise UsageError("kuser-d1 needs --K >= 2")
        policy = KUserD1Policy(K)
        config, k, n, make = policy.config, K, policy.n, (lambda r, s: KUserD1Policy(K))
    else:
        config = _config(opts["csit"])
        if not config.P:
            raise UsageError("zf needs at least one P receiver")
        if opts["n"] < 1:
            raise UsageError("--n must be positive")
        k, n = config.k, opts["n"]
        make = lambda r, s: ZeroForcingPolicy(config, n, config.k)  # noqa: E731
    attempts = []
    for attempt in range(5):
        channel_seed = seed + 1_000_003 * attempt
        realization = sample_channel(k, k, n, channel_seed)
        try:
            strategy = realize(make(realization, seed), config, realization)
        except SchemeError as exc:
            attempts.append(f"seed {channel_seed}: {exc}")
            continue
        return config, make, realization, strategy, attempts
    raise SchemeError("; ".join(attempts))


def cmd_simulate(opts: dict, scheme: str) -> tuple[str, int]:
    try:
        config, make, realization, strategy, attempts = _run_scheme(scheme, opts)
    except SchemeError as exc:
        return f"scheme construction failed: {exc}\n", EXIT_VERIFY
    tr = assemble(strategy, realization)
    records = check_decodability(tr)
    decodable = all(r.achieved for r in records)
    compliant = validate_csit_compliance(make, config, realization, opts["seed"], opts["audit_trials"])
    dof = achieved_dof(strategy)
    total = sum(dof, Fraction(0))
    if opts["dump"]:
        Path(opts["dump"]).write_text(tr.to_json(include_matrices=True))
    code = EXIT_OK if decodable and compliant else EXIT_VERIFY
    if opts["format"] == "json":
        doc = {
            "scheme": scheme,
            "config": str(config),
            "seed": realization.seed,
            "n": tr.n,
            "symbols": list(strategy.symbols),
            "decodable": decodable,
            "compliant": compliant,
            "dof": [format_rational(x, always_denominator=True) for x in dof],
            "sum": format_rational(total, always_denominator=True),
            "records": [r.to_dict() for r in records],
            "resampled": attempts,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n", code
    if opts["format"] == "csv":
        rows = [["receiver", "symbols", "dof", "lhsRank", "interferenceRank", "ownRank", "achieved"]]
        rows += [[str(r.receiver), str(r.symbols), fmt(d), str(r.lhs_rank), str(r.interference_rank),
                  str(r.own_rank), str(r.achieved).lower()] for r, d in zip(records, dof)]
        return _csv(rows), code
    lines = [
        f"scheme: {scheme}  config: {config}  n = {tr.n}  channel seed = {realization.seed}",
        f"decodable: {str(decodable).lower()}, dof = {fmt_tuple(dof)}, sum = {fmt(total)}",
        f"csit audit: {'compliant' if compliant else 'NON-COMPLIANT'} ({opts['audit_trials']} perturbation trials)",
    ]
    for note in attempts:
        lines.append(f"resampled after degenerate draw: {note}")
    for r in records:
        if not r.achieved:
            lines.append(f"receiver {r.receiver + 1}: lhs {r.lhs_rank}, interference {r.interference_rank}, "
                         f"own {r.own_rank}, wanted {r.symbols}")
    return "\n".join(lines) + "\n", code


def cmd_verify(opts: dict) -> tuple[str, int]:
    config = _config(opts["csit"])
    kinds = tuple(k.strip() for k in opts["kinds"].split(",")) if opts["kinds"] else KINDS
    bad = [k for k in kinds if k not in KINDS]
    if bad:
        raise UsageError(f"unknown generator kind(s) {bad}; choose from {list(KINDS)}")
    if opts["trials"] < 1:
        raise UsageError("--trials must be positive")
    report = run_suite(config, kinds, opts["trials"], opts["seed"])
    code = EXIT_OK if report.ok else EXIT_VERIFY
    if not report.ok and opts["dump"]:
        dumped = [v for t in report.tallies for v in t.violations]
        Path(opts["dump"]).write_text(json.dumps(dumped, indent=2, sort_keys=True))
    if opts["format"] == "json":
        return report.to_json() + "\n", code
    if opts["format"] == "csv":
        rows = [["config", "lemma", "kind", "trials", "passes", "minSlack", "violations"]]
        rows += [[t.config, t.lemma, t.kind, str(t.trials), str(t.passes),
                  "" if t.min_slack is None else fmt(t.min_slack), str(len(t.violations))] for t in report.tallies]
        return _csv(rows), code
    lines = [f"config {config}, {opts['trials']} trials per kind, seed {opts['seed']}"]
    if report.skipped:
        lines.append("not applicable: " + ", ".join(report.skipped))
    lines.append(f"{'lemma':<20} {'kind':<20} {'passes':>9} {'min slack':>10}")
    for t in report.tallies:
        slack = "-" if t.min_slack is None else fmt(t.min_slack)
        lines.append(f"{t.lemma:<20} {t.kind:<20} {t.passes:>4}/{t.trials:<4} {slack:>10}")
    lines.append("violations: " + str(report.violation_count))
    return "\n".join(lines) + "\n", code


def cmd_bounds(opts: dict) -> tuple[str, int]:
    P, D = opts["p"], opts["d"]
    if P is None or D is None:
        raise UsageError("bounds needs --P and --D")
    if P < 0 or D < 0:
        raise UsageError("--P and --D must be nonnegative")
    doc: dict = {"P": P, "D": D}
    code = EXIT_OK
    lp = None
    if 1 <= P + D <= 10:
        lp = build_region(region_config(P, D)).maximize([1] * (P + D))[0]
        doc["lp"] = lp
    if P + D == 0:
        doc["note"] = "0 active receivers: with no P or D receivers the sum-DoF is 1 if any N receiver exists"
    elif D == 0:
        doc["exact"] = Fraction(P)
    elif D == 1:
        doc["exact"] = single_delayed_sumdof(P)
        if lp is not None and lp != doc["exact"]:
            code = EXIT_GOLDEN
    elif P >= D:
        b = closed_form_bounds(P, D)
        doc.update(lower=b.lower, upper=b.upper, gap=b.gap, cap=b.cap)
        if lp is not None and not b.lower <= lp <= b.upper:
            code = EXIT_GOLDEN
    else:
        doc["note"] = "outside the closed-form regime |P| >= |D|; LP value only"
    if opts["format"] == "json":
        out = {k: (format_rational(v, always_denominator=True) if isinstance(v, Fraction) else v)
               for k, v in doc.items()}
        return json.dumps(out, indent=2, sort_keys=True) + "\n", code
    if opts["format"] == "csv":
        keys = [k for k in doc if k not in ("P", "D")]
        values = [fmt(doc[k]) if isinstance(doc[k], Fraction) else str(doc[k]) for k in keys]
        rows = [["P", "D"] + keys, [str(P), str(D)] + values]
        return _csv(rows), code
    lines = [f"|P| = {P}, |D| = {D}, |N| = 0"]
    if "exact" in doc:
        lines.append(f"exact sum-DoF: {fmt_text(doc['exact'])}")
    if "lower" in doc:
        lines.append(f"lower: {fmt_text(doc['lower'])}")
        lines.append(f"upper: {fmt_text(doc['upper'])}")
        lines.append(f"gap: {fmt_text(doc['gap'])} (cap |P|/2^|P| = {fmt(doc['cap'])} <= 1/2)")
    if lp is not None:
        lines.append(f"LP over the outer-bound region: {fmt_text(lp)}")
    if "note" in doc:
        lines.append("note: " + doc["note"])
    if code == EXIT_GOLDEN:
        lines.append("MISMATCH between closed form and LP")
    return "\n".join(lines) + "\n", code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = _settings(args)
        if args.command == "region":
            text, code = cmd_region(opts)
        elif args.command == "table1":
            text, code = cmd_table1(opts)
        elif args.command == "simulate":
            text, code = cmd_simulate(opts, args.scheme)
        elif args.command == "verify":
            text, code = cmd_verify(opts)
        else:
            text, code = cmd_bounds(opts)
    except UsageError as exc:
        print(f"doflab: usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if opts["out"]:
        Path(opts["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
