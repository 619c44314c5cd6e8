from fractions import Fraction

import pytest

from ndmonogamy.behavior import check_no_disturbance
from ndmonogamy.bounds import chsh_chain_expression, cycle_expression
from ndmonogamy.lp import build_nd_lp
from ndmonogamy.monogamy import (
    MONOGAMOUS,
    NOT_MONOGAMOUS,
    UNDECIDED,
    MonogamyInstance,
    build_chain,
    build_contextual_bell,
    build_loop,
    build_multi_cycle,
    build_one_to_many,
    certify,
    double_pr_pins,
    double_pr_triples,
    recombine,
    three_party_scenario,
)
from ndmonogamy.scenario import Expression, Scenario, ScenarioError

from oracles import brute_classical, has_long_induced_cycle


def edge_totals(exprs):
    out = {}
    for e in exprs:
        for t in e.terms:
            out[t.pair] = out.get(t.pair, 0) + t.coeff
    return {k: v for k, v in out.items() if v}


def check_recombination(inst):
    """Independent re-check: same term totals, each expression's witness graph is
    chordal by induced-cycle search and uses only compatible pairs, bounds add up."""
    rec = recombine(inst)
    assert rec is not None
    assert edge_totals(rec.expressions) == edge_totals(inst.expressions)
    sc = inst.scenario
    for e, w in zip(rec.expressions, rec.witnesses):
        verts = e.measurements
        pos = {v: i for i, v in enumerate(verts)}
        edges = {t.pair for t in e.terms} | set(w.fill)
        assert all(sc.compatible(a, b) for a, b in edges)
        assert not has_long_induced_cycle(len(verts), [(pos[a], pos[b]) for a, b in edges])
    total = sum((brute_classical(e) for e in rec.expressions), Fraction(0))
    assert total == sum((brute_classical(e) for e in inst.expressions), Fraction(0))
    return rec


def test_one_to_many_layout():
    inst = build_one_to_many([4, 3])
    lab = inst.scenario.labels
    assert [lab[u] for u in inst.shared] == ["A1", "A2", "A4"]
    assert inst.expressions[1].render() == "A1C1 + C1A2 + A2C2 + C2A4 + A4C3 - C3A1"


def test_recombination_reproduces_worked_example():
    rec = check_recombination(build_one_to_many([4, 3]))
    assert [e.render() for e in rec.expressions] == [
        "A1B1 + B1A2 + A2B2 + B2A3 + A3B3 + B3A4 + A4C3 - C3A1",
        "A1C1 + C1A2 + A2C2 + C2A4 + A4B4 - B4A1",
    ]


@pytest.mark.parametrize(
    "inst",
    [
        build_one_to_many([2, 2]),
        build_one_to_many([3, 2, 2]),
        build_contextual_bell(5),
        build_contextual_bell(8),
        build_multi_cycle([4, 4]),
        build_multi_cycle([5, 6, 4]),
        build_multi_cycle([8, 11]),
        build_loop([2, 2, 2]),
        build_loop([2, 3, 2]),
        build_chain(2),
        build_chain(4),
    ],
    ids=lambda i: i.kind + ":" + "+".join(e.name for e in i.expressions),
)
def test_structural_certificates_are_sound(inst):
    check_recombination(inst)


@pytest.mark.parametrize(
    "inst, total",
    [
        (build_one_to_many([2, 2]), 4),
        (build_one_to_many([2, 2, 2]), 6),
        (build_contextual_bell(5), 5),
        (build_multi_cycle([4, 4]), 4),
        (build_multi_cycle([5, 5]), 6),
        (build_loop([2, 2, 2]), 6),
        (build_loop([2, 3, 2]), 8),
        (build_chain(2), 4),
    ],
)
def test_lp_agrees_with_structural_bound(inst, total):
    r = certify(inst)
    assert r.classical_sum == total
    assert r.lp_optimum == total
    assert r.verdict == MONOGAMOUS
    assert r.structural


def test_sharing_only_one_setting_breaks_monogamy():
    r = certify(build_one_to_many([2, 2], shared_count=1))
    assert r.lp_optimum > 4
    assert r.verdict == NOT_MONOGAMOUS


def test_odd_chain_is_not_monogamous():
    inst = build_chain(3)
    assert any("odd chain" in n for n in inst.notes)
    r = certify(inst)
    assert r.lp_optimum > 6 and r.verdict == NOT_MONOGAMOUS


def test_verdict_without_lp():
    r = certify(build_multi_cycle([8, 11]), use_lp=False)
    assert r.lp_optimum is None and r.verdict == MONOGAMOUS
    r = certify(build_chain(3), use_lp=False)
    assert r.recombination is None and r.verdict == UNDECIDED


def test_lp_cap_is_reported():
    r = certify(build_one_to_many([2, 2]), lp_cap=8)
    assert r.lp_optimum is None
    assert any("cap" in n for n in r.notes)
    assert r.verdict == MONOGAMOUS


def test_builders_validate_input():
    with pytest.raises(ScenarioError):
        build_contextual_bell(6, shared=(0, 2))
    with pytest.raises(ScenarioError):
        build_multi_cycle([6, 6], shared_positions=[1, 3])
    with pytest.raises(ScenarioError):
        build_loop([2, 2])
    with pytest.raises(ScenarioError):
        build_chain(1)
    with pytest.raises(ScenarioError):
        build_one_to_many([2, 3], shared_count=3)


def test_instance_shared_must_really_be_shared():
    e = chsh_chain_expression(2)
    with pytest.raises(ScenarioError):
        MonogamyInstance(e.scenario, (e,), (0,))


def test_single_chordal_expression_is_certified_alone():
    sc = Scenario.from_labels(["A", "B", "C", "D"], [("A", "B"), ("B", "C"), ("C", "D"), ("D", "A"), ("A", "C")])
    e = Expression.from_labels("sq", sc, [("A", "B", 1), ("B", "C", 1), ("C", "D", 1), ("D", "A", -1)])
    inst = MonogamyInstance.from_expressions(sc, [e])
    r = certify(inst)
    assert r.recombination.scheme == "single"
    assert r.lp_optimum == r.classical_sum == 2


def test_non_chordal_single_cycle_has_no_certificate():
    e = cycle_expression(5)
    inst = MonogamyInstance.from_expressions(e.scenario, [e])
    r = certify(inst)
    assert r.recombination is None and r.verdict == NOT_MONOGAMOUS


def test_double_pr_gluing_disturbs_bob_charlie():
    sc = three_party_scenario()
    pins = double_pr_pins(sc)
    assert len(pins) == 8
    violations = check_no_disturbance(sc, double_pr_triples(sc))
    inters = {tuple(sc.labels[u] for u in v.intersection) for v in violations}
    assert ("B1", "C2") in inters and ("B2", "C1") in inters
    # the glued triples reproduce every pinned pair
    triples = double_pr_triples(sc)
    for pair, table in pins:
        holder = next(t for c, t in triples.items() if set(pair) <= set(c))
        assert holder.marginal(pair) == table
    assert build_nd_lp(sc, None, pins).n_vars == 64
