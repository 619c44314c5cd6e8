"""Command-line entry point: ``ndmono <subcommand> [options]``.

Exit codes: 0 success, 1 negative analytic outcome (not monogamous,
infeasible, disturbance found, failed demo), 2 invalid input, 3 resource cap.
"""
from __future__ import annotations

import argparse
import random
import sys

from . import behavior as bh
from . import bounds as bd
from . import formats as fmt
from . import graphs as gr
from . import lp
from . import monogamy as mg
from .scenario import Expression, ScenarioError, format_fraction, induced_compat_graph, scenario_graph

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3
FINE_JOINT_CAP = 20


class CLIError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _emit(args, data: dict):
    if args.format == "json":
        sys.stdout.write(fmt.dumps(data))
    else:
        sys.stdout.write(fmt.render_text(data) + "\n")


def _sizes(text: str | None) -> list[int]:
    if not text:
        raise CLIError("--sizes is required")
    try:
        sizes = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CLIError(f"--sizes must be a comma list of integers, got {text!r}") from None
    if not sizes:
        raise CLIError("--sizes is empty")
    return sizes


def _load_scenario(args):
    if not args.scenario:
        raise CLIError("--scenario is required")
    data = fmt.read_json(args.scenario)
    sc, exprs = fmt.load_scenario(data)
    return data, sc, exprs


def _pick_expr(exprs: list[Expression], name: str | None) -> Expression:
    if name is None:
        if len(exprs) != 1:
            raise CLIError("the scenario file holds %d expressions; choose one with --expr" % len(exprs))
        return exprs[0]
    for e in exprs:
        if e.name == name:
            return e
    raise CLIError(f"no expression named {name!r}")


def _labels(sc, idx) -> list[str]:
    return [sc.labels[u] for u in idx]


# ------------------------------------------------------------------ commands


def cmd_chordal(args) -> int:
    _, sc, exprs = _load_scenario(args)
    graph = scenario_graph(sc)
    if args.expr:
        graph = induced_compat_graph(sc, _pick_expr(exprs, args.expr).measurements)
    peo, cycle = gr.chordality_certificate(graph)
    out = {"vertices": _labels(sc, graph.vertices), "chordal": peo is not None}
    if peo is not None:
        tree = gr.clique_tree(graph, peo)
        out["perfect_elimination_ordering"] = _labels(sc, peo.order)
        out["maximal_cliques"] = [",".join(_labels(sc, c)) for c in tree.nodes]
        out["clique_tree"] = [
            f"{','.join(_labels(sc, tree.nodes[a]))} -- {','.join(_labels(sc, tree.nodes[b]))} [{','.join(_labels(sc, s))}]"
            for a, b, s in tree.edges
        ]
    else:
        out["induced_cycle"] = _labels(sc, cycle)
    _emit(args, out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    _, sc, exprs = _load_scenario(args)
    expr = _pick_expr(exprs, args.expr)
    try:
        report = bd.bounds_report(expr, lp_cap=args.lp_cap)
    except bd.EnumerationCapError as exc:
        raise CLIError(str(exc), EXIT_CAP) from exc
    _emit(args, fmt.bounds_to_dict(expr, report))
    return EXIT_OK


def _load_behavior(args):
    if not args.behavior:
        raise CLIError("--behavior is required")
    data = fmt.read_json(args.behavior)
    return fmt.load_tables(data, "tables")


def cmd_check_nd(args) -> int:
    sc, _, tables = _load_behavior(args)
    violations = bh.check_no_disturbance(sc, tables)
    out = {"no_disturbance": not violations, "violations": []}
    for v in violations:
        out["violations"].append({
            "cliques": [",".join(_labels(sc, c)) for c in v.cliques],
            "intersection": ",".join(_labels(sc, v.intersection)),
            "differences": [
                f"{bh.outcome_string(o)}: {format_fraction(p)} vs {format_fraction(q)}" for o, p, q in v.differences
            ],
        })
    _emit(args, out)
    return EXIT_OK if not violations else EXIT_NEGATIVE


def cmd_fine_joint(args) -> int:
    sc, exprs, tables = _load_behavior(args)
    behavior = bh.Behavior(sc, tables)
    if sc.size > FINE_JOINT_CAP:
        raise CLIError(f"joint over {sc.size} measurements exceeds the cap of {FINE_JOINT_CAP}", EXIT_CAP)
    joint = bh.fine_joint(behavior, FINE_JOINT_CAP)
    out = {
        "order": list(sc.labels),
        "joint": {bh.outcome_string(o): format_fraction(p) for o, p in joint.table.entries.items() if p},
    }
    if exprs:
        out["expectations"] = {e.name: format_fraction(bh.evaluate_on_joint(e, joint)) for e in exprs}
    _emit(args, out)
    return EXIT_OK


def cmd_nd_max(args) -> int:
    _, sc, exprs = _load_scenario(args)
    expr = _pick_expr(exprs, args.expr)
    try:
        value, behavior = lp.nd_maximize(sc, expr, lp_cap=args.lp_cap)
    except lp.LPCapError as exc:
        raise CLIError(str(exc), EXIT_CAP) from exc
    out = {"expression": expr.name, "optimum": fmt.rational_field(value)}
    if args.dump_behavior:
        with open(args.dump_behavior, "w") as fh:
            fh.write(fmt.dumps(fmt.behavior_to_dict(behavior, [expr])))
        out["behavior_file"] = args.dump_behavior
    _emit(args, out)
    return EXIT_OK


def _extension(sc, pins, lp_cap):
    model = lp.build_nd_lp(sc, None, pins)
    if lp_cap is not None and model.n_vars > lp_cap:
        raise CLIError(f"LP has {model.n_vars} variables, above the cap of {lp_cap}", EXIT_CAP)
    sol = lp.solve(model)
    feasible = sol.status != lp.INFEASIBLE
    hint = [] if feasible else lp.infeasibility_hint(model, len(model.rows) - sum(2 ** len(t.support) for _, t in pins))
    return feasible, hint, model


def cmd_extend(args) -> int:
    if not args.behavior:
        raise CLIError("--behavior (a pins file) is required")
    data = fmt.read_json(args.behavior)
    sc, _, pins = fmt.load_tables(data, "pins")
    feasible, hint, model = _extension(sc, list(pins.items()), args.lp_cap)
    _emit(args, {
        "variables": model.n_vars,
        "rows": len(model.rows),
        "status": "feasible" if feasible else "infeasible",
        "conflicting_rows": hint,
    })
    return EXIT_OK if feasible else EXIT_NEGATIVE


def build_instance(theorem: str, sizes: list[int]) -> mg.MonogamyInstance:
    if theorem == "2":
        return mg.build_one_to_many(sizes)
    if theorem == "3":
        if len(sizes) != 1:
            raise CLIError("--theorem 3 takes one cycle length in --sizes")
        return mg.build_contextual_bell(sizes[0])
    if theorem == "4":
        return mg.build_multi_cycle(sizes)
    if theorem == "5-loop":
        return mg.build_loop(sizes)
    if theorem == "5-chain":
        return mg.build_chain(len(sizes), sizes)
    raise CLIError(f"unknown theorem {theorem!r}")


def _instance_from_file(args) -> mg.MonogamyInstance:
    data, sc, exprs = _load_scenario(args)
    if len(exprs) < 1:
        raise CLIError("the scenario file lists no expressions")
    shared = data.get("shared")
    if shared is None:
        return mg.MonogamyInstance.from_expressions(sc, exprs)
    return mg.MonogamyInstance(sc, tuple(exprs), tuple(sorted(sc.indices(shared))))


def cmd_monogamy(args) -> int:
    if args.theorem:
        inst = build_instance(args.theorem, _sizes(args.sizes))
    else:
        inst = _instance_from_file(args)
    report = mg.certify(inst, lp_cap=args.lp_cap, use_lp=not args.no_lp)
    _emit(args, fmt.report_to_dict(report))
    if report.verdict == mg.NOT_MONOGAMOUS:
        return EXIT_NEGATIVE
    if args.require_lp and report.lp_optimum is None:
        return EXIT_CAP
    return EXIT_OK


def cmd_gen(args) -> int:
    what = args.what
    if what == "cycle":
        if args.n is None:
            raise CLIError("gen cycle needs --n")
        e = bd.cycle_expression(args.n)
        out = fmt.scenario_to_dict(e.scenario, [e])
    elif what == "chain":
        if args.m is None:
            raise CLIError("gen chain needs --m")
        e = bd.chsh_chain_expression(args.m)
        out = fmt.scenario_to_dict(e.scenario, [e])
    elif what == "prbox":
        out = fmt.behavior_to_dict(bh.pr_box(), [bd.chsh_chain_expression(2, name="CHSH")])
    elif what == "instance":
        if not args.theorem:
            raise CLIError("gen instance needs --theorem and --sizes")
        inst = build_instance(args.theorem, _sizes(args.sizes))
        out = fmt.scenario_to_dict(inst.scenario, inst.expressions, inst.shared)
    elif what == "random-behavior":
        _, sc, exprs = _load_scenario(args)
        rng = random.Random(args.seed)
        out = fmt.behavior_to_dict(bh.random_behavior(sc, rng), exprs)
    elif what == "pins":
        sc = mg.three_party_scenario()
        out = fmt.scenario_to_dict(sc)
        out["pins"] = dict(fmt.table_to_dict(sc, t) for _, t in mg.double_pr_pins(sc))
    else:  # pragma: no cover - argparse restricts choices
        raise CLIError(f"unknown generator {what!r}")
    sys.stdout.write(fmt.dumps(out))
    return EXIT_OK


# ------------------------------------------------------------------ demos


def _check(cond: bool, what: str, failures: list):
    if not cond:
        failures.append(what)


def demo_prbox_extension(args, failures):
    sc = mg.three_party_scenario()
    pins = mg.double_pr_pins(sc)
    out = {"pinned_tables": dict(fmt.table_to_dict(sc, t) for _, t in pins)}
    feasible, hint, model = _extension(sc, pins, args.lp_cap)
    out["variables"] = model.n_vars
    out["status"] = "feasible" if feasible else "infeasible"
    out["conflicting_rows"] = hint
    violations = bh.check_no_disturbance(sc, mg.double_pr_triples(sc))
    out["glued_triples_disturbance"] = sorted({",".join(_labels(sc, v.intersection)) for v in violations})
    _check(not feasible, "extension LP should be infeasible", failures)
    _check("B1,C2" in out["glued_triples_disturbance"], "B1,C2 marginal should disagree", failures)
    return out


def _certify_demo(inst, expect_sum, expect_lp, expect_verdict, args, failures, use_lp=True):
    report = mg.certify(inst, lp_cap=args.lp_cap, use_lp=use_lp)
    out = fmt.report_to_dict(report)
    _check(report.classical_sum == expect_sum, f"classical_sum should be {expect_sum}", failures)
    if expect_lp is not None:
        _check(report.lp_optimum is not None and expect_lp(report.lp_optimum), "unexpected LP optimum", failures)
    _check(report.verdict == expect_verdict, f"verdict should be {expect_verdict}", failures)
    return report, out


def demo_chsh_monogamy(args, failures):
    _, out = _certify_demo(mg.build_one_to_many([2, 2]), 4, lambda v: v == 4, mg.MONOGAMOUS, args, failures)
    weak = mg.certify(mg.build_one_to_many([2, 2], shared_count=1), lp_cap=args.lp_cap)
    out["only_A1_shared_lp_optimum"] = fmt.rational_field(weak.lp_optimum)
    _check(weak.lp_optimum is not None and weak.lp_optimum > 4, "sharing only A1 should exceed 4", failures)
    return out


def demo_one_to_many(args, failures):
    report, out = _certify_demo(mg.build_one_to_many([4, 3]), 10, lambda v: v == 10, mg.MONOGAMOUS, args, failures)
    rendered = [e.render() for e in report.recombined]
    expected = [
        "A1B1 + B1A2 + A2B2 + B2A3 + A3B3 + B3A4 + A4C3 - C3A1",
        "A1C1 + C1A2 + A2C2 + C2A4 + A4B4 - B4A1",
    ]
    _check(rendered == expected, "recombined expressions should swap the closing terms", failures)
    return out


def demo_contextual_bell(args, failures):
    return _certify_demo(mg.build_contextual_bell(8), 8, lambda v: v == 8, mg.MONOGAMOUS, args, failures)[1]


def demo_multi_cycle(args, failures):
    report, out = _certify_demo(
        mg.build_multi_cycle([8, 11]), 15, (lambda v: v == 15) if not args.no_lp else None,
        mg.MONOGAMOUS, args, failures, use_lp=not args.no_lp,
    )
    _check(report.structural, "structural certificate expected", failures)
    return out


def demo_loop3(args, failures):
    report, out = _certify_demo(mg.build_loop([2, 2, 2]), 6, lambda v: v == 6, mg.MONOGAMOUS, args, failures)
    inst = report.instance
    pair_optima = []
    for i in range(3):
        pair = [inst.expressions[i], inst.expressions[(i + 1) % 3]]
        value, _ = lp.nd_maximize(inst.scenario, pair[0] + pair[1])
        pair_optima.append(format_fraction(value))
        _check(value == 4, "each neighbouring pair should have LP optimum 4", failures)
    out["pair_lp_optima"] = pair_optima
    return out


def demo_chain2(args, failures):
    return _certify_demo(mg.build_chain(2), 4, lambda v: v == 4, mg.MONOGAMOUS, args, failures)[1]


def demo_chain3(args, failures):
    return _certify_demo(mg.build_chain(3), 6, lambda v: v > 6, mg.NOT_MONOGAMOUS, args, failures)[1]


DEMOS = {
    "prbox-extension": demo_prbox_extension,
    "chsh-monogamy": demo_chsh_monogamy,
    "theorem2-example": demo_one_to_many,
    "theorem3-example": demo_contextual_bell,
    "theorem4-example": demo_multi_cycle,
    "loop3": demo_loop3,
    "chain2": demo_chain2,
    "chain3-nonmonogamy": demo_chain3,
}


def cmd_demo(args) -> int:
    failures: list[str] = []
    out = DEMOS[args.name](args, failures)
    out = {"demo": args.name, **out, "expectations": "met" if not failures else failures}
    _emit(args, out)
    return EXIT_OK if not failures else EXIT_NEGATIVE


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--lp-cap", type=int, default=mg.DEFAULT_LP_CAP, help="maximum LP variable count")

    p = argparse.ArgumentParser(prog="ndmono", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("chordal", parents=[common], help="chordality certificate or induced cycle")
    s.add_argument("--scenario")
    s.add_argument("--expr")
    s.set_defaults(func=cmd_chordal)

    s = sub.add_parser("bounds", parents=[common], help="classical / quantum / no-disturbance bounds")
    s.add_argument("--scenario")
    s.add_argument("--expr")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("fine-joint", parents=[common], help="glue a chordal behavior into a joint")
    s.add_argument("--behavior")
    s.set_defaults(func=cmd_fine_joint)

    s = sub.add_parser("check-nd", parents=[common], help="check clique tables for disturbance")
    s.add_argument("--behavior")
    s.set_defaults(func=cmd_check_nd)

    s = sub.add_parser("nd-max", parents=[common], help="maximise an expression over the ND polytope")
    s.add_argument("--scenario")
    s.add_argument("--expr")
    s.add_argument("--dump-behavior", metavar="PATH")
    s.set_defaults(func=cmd_nd_max)

    s = sub.add_parser("extend", parents=[common], help="can pinned marginals be extended?")
    s.add_argument("--behavior", help="pins file")
    s.set_defaults(func=cmd_extend)

    s = sub.add_parser("monogamy", parents=[common], help="certify a monogamy relation")
    s.add_argument("--theorem", choices=("2", "3", "4", "5-loop", "5-chain"))
    s.add_argument("--sizes")
    s.add_argument("--scenario")
    s.add_argument("--no-lp", action="store_true", help="structural certificate only")
    s.add_argument("--require-lp", action="store_true", help="exit 3 when the LP was skipped")
    s.set_defaults(func=cmd_monogamy)

    s = sub.add_parser("gen", parents=[common], help="write scenario / behavior files")
    s.add_argument("what", choices=("cycle", "chain", "prbox", "instance", "random-behavior", "pins"))
    s.add_argument("--n", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--theorem", choices=("2", "3", "4", "5-loop", "5-chain"))
    s.add_argument("--sizes")
    s.add_argument("--scenario")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("demo", parents=[common], help="self-checking worked examples")
    s.add_argument("name", choices=sorted(DEMOS))
    s.add_argument("--no-lp", action="store_true")
    s.set_defaults(func=cmd_demo)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (lp.LPCapError, bd.EnumerationCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except lp.InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (ScenarioError, bh.BehaviorError, gr.GraphError, lp.LPError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
