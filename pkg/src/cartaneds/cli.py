"""Command-line front end.

Exit codes: 0 all checks pass, 1 verification mismatch, 2 input or parse
error.  Every command prints a human summary to stdout and can write the
full JSON report with --json.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .expr import Context, ExprError
from .forms import Coframe, Form, wedge
from .monge import (
    ClassicalMAEquation,
    GroupElementG,
    OrbitNormalizationError,
    S1S2Pair,
    act_group_element,
    classify_equation,
    coordinate_context,
    normalize_S2,
)
from .parse import ParseError, parse_expr
from .pfaffian import DEFAULT_SEED, LinearPfaffianSystem, absorb_torsion, cartan_test, extract_tableau_and_torsion
from .report import make_report, write_json
from .scenarios import (
    SCENARIO_IDS,
    GoldenDataError,
    ScenarioError,
    case3_minor_checks,
    verify_scenario,
)
from .casei import CaseIModel, ModelError
from .reductions import replay

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INPUT = 2


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("EDS_SEED")
    if env is not None:
        return int(env)
    return DEFAULT_SEED


def _finish(args, report: dict, lines: list[str], ok: bool) -> int:
    for line in lines:
        print(line)
    if args.json:
        write_json(report, args.json)
    return EXIT_OK if ok else EXIT_MISMATCH


def _load_coeff_file(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


# --- classify ---------------------------------------------------------------------


def cmd_classify(args) -> int:
    coeffs = {}
    if args.file:
        coeffs.update(_load_coeff_file(args.file))
    for key in "ABCDE":
        val = getattr(args, key)
        if val is not None:
            coeffs[key] = val
    ctx, table, cf, rules = coordinate_context()
    eq = ClassicalMAEquation.parse(ctx, coeffs)
    result = classify_equation(eq, cf, rules, table, seed=_seed(args))
    report = make_report(
        "classify",
        {k: str(v) for k, v in zip("ABCDE", eq.coefficients())},
        result.to_dict(),
        ["golden:rank1/rules"],
        _seed(args),
    )
    lines = [f"{result.kind}, discriminant {result.discriminant}"]
    return _finish(args, report, lines, True)


# --- verify -----------------------------------------------------------------------


def cmd_verify(args) -> int:
    ids = SCENARIO_IDS if args.scenario == "all" else [args.scenario]
    seed = _seed(args)
    with ThreadPoolExecutor(max_workers=min(4, len(ids))) as pool:
        reports = list(pool.map(lambda sid: verify_scenario(sid, seed=seed, scenario_dir=args.scenario_dir), ids))
    ok = all(r.ok for r in reports)
    results = [r.to_dict() for r in reports]
    if args.scenario in ("all", "case3"):
        minors = case3_minor_checks(scenario_dir=args.scenario_dir)
        results.append({"scenario": "case3-minors", "ok": minors["ok"], "computed": minors})
        ok = ok and minors["ok"]
    report = make_report(
        "verify",
        {"scenario": args.scenario},
        results,
        sorted({c for r in reports for c in r.citations}),
        seed,
    )
    lines = []
    for r in results:
        status = "pass" if r["ok"] else "FAIL"
        lines.append(f"[{status}] scenario {r['scenario']}")
        for diff in r.get("diffs", []):
            lines.append(f"    {diff}")
        if r["scenario"] in ("case2a", "case2b+", "case2b-", "case3") and r["ok"]:
            c = r["computed"]
            lines.append(
                f"    characters {c['characters']}  tableau {c['tableau_dim']}  "
                f"prolongation {c['prolongation_dim']}  involutive {c['involutive']}"
            )
    return _finish(args, report, lines, ok)


# --- replay -----------------------------------------------------------------------


def cmd_replay(args) -> int:
    tr = replay(args.target)
    report = make_report("replay", {"target": args.target}, tr.to_dict(), [s.citation for s in tr.steps], _seed(args))
    lines = [f"[{'pass' if tr.ok else 'FAIL'}] replay {args.target} ({tr.outcome})"]
    for s in tr.steps:
        lines.append(f"    [{'ok' if s.verified else 'FAIL'}] {s.note}")
    lines.append(f"    counts: {tr.counts}")
    return _finish(args, report, lines, tr.ok)


# --- case1 ------------------------------------------------------------------------


def _case1_model(args) -> CaseIModel:
    return CaseIModel(args.f, args.phi)


def cmd_case1(args) -> int:
    seed = _seed(args)
    model = _case1_model(args)
    if args.action == "pde":
        a, b, c = model.pde()
        results = {"a": str(a), "b": str(b), "c": str(c)}
        lines = [f"z_xy + ({a}) z_x + ({b}) z_y + ({c}) z = 0"]
        ok = True
    elif args.action == "invariantA":
        A = model.invariant_A()
        results = {"A": str(A)}
        lines = [f"A = {A}"]
        ok = True
    elif args.action == "cohomogeneity":
        verdict = model.cohomogeneity()
        results = verdict.to_dict()
        lines = [f"cohomogeneity level: {verdict.level}"]
        ok = verdict.level != "indeterminate"
    else:  # coframe
        check = model.verify_structure_equations()
        forms = model.coframe_forms()
        results = {
            "coframe": {k: str(v) for k, v in forms.items()},
            "phi3": str(check.phi3),
            "phi7": str(check.phi7),
            "structure_residuals_vanish": check.all_zero,
            "dphi0_coefficient": str(check.dphi0_coefficient),
            "dphi1_coefficient": str(check.dphi1_coefficient),
        }
        lines = [f"{k} = {v}" for k, v in results["coframe"].items()]
        lines.append(f"structure equations verified: {check.all_zero}")
        ok = check.all_zero
    report = make_report(
        f"case1 {args.action}",
        {"f": args.f, "phi": args.phi},
        results,
        ["golden:case1/expected"],
        seed,
    )
    return _finish(args, report, lines, ok)


# --- orbit ------------------------------------------------------------------------


def _parse_matrix(ctx: Context, text: str):
    rows = json.loads(text)
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ParseError("matrix must be 2x2", text, 0)
    return [[parse_expr(str(e), ctx, auto_register=True) for e in row] for row in rows]


def _mat_strs(m) -> list[list[str]]:
    return [[str(e) for e in row] for row in m]


def cmd_orbit(args) -> int:
    ctx = Context()
    zero = ctx.zero()
    s1 = _parse_matrix(ctx, args.s1) if args.s1 else [[zero, zero], [zero, zero]]
    s2 = _parse_matrix(ctx, args.s2)
    pair = S1S2Pair(s1, s2)
    if args.action == "normalize-s2":
        try:
            res = normalize_S2(pair, ctx, seed=_seed(args))
        except OrbitNormalizationError as exc:
            report = make_report(
                "orbit normalize-s2",
                {"S1": args.s1, "S2": args.s2},
                {"error": str(exc), "orbit": exc.orbit},
                [],
                _seed(args),
            )
            return _finish(args, report, [f"normalization failed: {exc}"], False)
        results = {
            "orbit": res.orbit,
            "normal_S1": _mat_strs(res.normal.S1),
            "normal_S2": _mat_strs(res.normal.S2),
            "g": {
                "a": str(res.g.a),
                "Amat": _mat_strs(res.g.Amat),
                "Bmat": _mat_strs(res.g.Bmat),
                "j_count": res.g.j_count,
            },
            "side_conditions": res.side_conditions,
            "rank_drop_locus": res.rank_drop_locus,
        }
        lines = [f"orbit: {res.orbit}", f"normal S2: {results['normal_S2']}"]
        ok = True
    else:  # act
        g = GroupElementG(
            parse_expr(args.a, ctx, auto_register=True),
            _parse_matrix(ctx, args.amat),
            _parse_matrix(ctx, args.bmat),
            args.j,
        )
        out = act_group_element(g, pair)
        results = {"S1": _mat_strs(out.S1), "S2": _mat_strs(out.S2)}
        lines = [f"S1 -> {results['S1']}", f"S2 -> {results['S2']}"]
        ok = True
    report = make_report(
        f"orbit {args.action}",
        {"S1": args.s1, "S2": args.s2},
        results,
        [],
        _seed(args),
    )
    return _finish(args, report, lines, ok)


# --- cartan -----------------------------------------------------------------------


def cmd_cartan(args) -> int:
    with open(args.system, encoding="utf-8") as fh:
        data = json.load(fh)
    ctx = Context()
    for name in data.get("scalars", []):
        ctx.function(name)
    cf = Coframe(ctx, data["generators"], independence=data["independence"])
    dthetas = []
    thetas = []
    for name, terms in data["thetas"].items():
        thetas.append(name)
        f = cf.zero(2)
        for coeff, mono in terms:
            f = f + parse_expr(str(coeff), ctx, auto_register=True) * wedge(cf.gen(mono[0]), cf.gen(mono[1]))
        dthetas.append(f)
    sys_ = LinearPfaffianSystem(cf, thetas, dthetas, data["independence"], data["frees"])
    tab, torsion = extract_tableau_and_torsion(sys_)
    rep = cartan_test(tab, torsion, seed=_seed(args))
    report = make_report("cartan", {"system": args.system}, rep.to_dict(), [], _seed(args))
    lines = [
        f"characters {list(rep.characters)}  tableau {rep.tableau_dim}  "
        f"prolongation {rep.prolongation_dim}",
        f"involutive: {rep.involutive}   torsion absorbed: {rep.absorbed}",
    ]
    if rep.required_relations:
        lines.append("required relations: " + "; ".join(rep.required_relations))
    return _finish(args, report, lines, True)


# --- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cartaneds",
        description="Exact exterior-differential-systems toolkit: classify "
        "second-order equations, verify golden coframe scenarios, replay "
        "elimination computations, and run Cartan's test.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", help="write the full JSON report to this path")
        p.add_argument("--seed", type=int, default=None, help="seed for generic-point sampling (env EDS_SEED)")

    p = sub.add_parser("classify", help="classify a second-order equation by its five coefficients")
    for key in "ABCDE":
        p.add_argument(f"--{key}", default=None, help=f"coefficient {key} (expression in x,y,z,p,q)")
    p.add_argument("--file", help="key=value file with coefficients A..E")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="verify a golden scenario (or all of them)")
    p.add_argument("--scenario", default="all", choices=["all"] + SCENARIO_IDS)
    p.add_argument("--scenario-dir", default=None, help="override the golden data directory")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="replay an elimination computation")
    p.add_argument(
        "--target",
        required=True,
        choices=["section3", "appendixA:+", "appendixA:-", "appendixB"],
    )
    common(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("case1", help="vanishing-torsion coordinate models")
    p.add_argument("action", choices=["pde", "coframe", "cohomogeneity", "invariantA"])
    p.add_argument("-f", dest="f", default=None, help="the function f(x,y); omit for symbolic")
    p.add_argument("--phi", dest="phi", default=None, help="the function Phi(x,y); omit for symbolic")
    common(p)
    p.set_defaults(func=cmd_case1)

    p = sub.add_parser("orbit", help="structure-group action on the invariant matrices")
    p.add_argument("action", choices=["normalize-s2", "act"])
    p.add_argument("--s1", default=None, help='S1 as row-major JSON, e.g. [["0","0"],["0","0"]]')
    p.add_argument("--s2", required=True, help="S2 as row-major JSON of expression strings")
    p.add_argument("--a", default="1", help="group scale a (act)")
    p.add_argument("--amat", default=None, help="block A as row-major JSON (act)")
    p.add_argument("--bmat", default=None, help="block B as row-major JSON (act)")
    p.add_argument("--j", type=int, default=0, help="number of block swaps (act)")
    common(p)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("cartan", help="run Cartan's test on a linear Pfaffian system file")
    p.add_argument("--system", required=True, help="JSON system description (see README)")
    common(p)
    p.set_defaults(func=cmd_cartan)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ExprError, ModelError, json.JSONDecodeError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GoldenDataError, ScenarioError) as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
