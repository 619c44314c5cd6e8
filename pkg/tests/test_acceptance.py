"""Acceptance criteria 1-11. Each prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""
import math
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ndmonogamy.behavior import (  # noqa: E402
    behavior_from_joint,
    fine_joint,
    marginalize,
    outcome_tuples,
    random_joint,
)
from ndmonogamy.bounds import chsh_chain_expression, classical_bound, cycle_expression, quantum_cycle_bound  # noqa: E402
from ndmonogamy.graphs import is_chordal  # noqa: E402
from ndmonogamy.lp import OPTIMAL, build_nd_lp, nd_maximize, solve  # noqa: E402
from ndmonogamy.monogamy import (  # noqa: E402
    MONOGAMOUS,
    NOT_MONOGAMOUS,
    build_chain,
    build_contextual_bell,
    build_loop,
    build_multi_cycle,
    build_one_to_many,
    certify,
    double_pr_pins,
    three_party_scenario,
)
from ndmonogamy.scenario import Expression, Graph, Scenario  # noqa: E402

from oracles import (  # noqa: E402
    brute_lp,
    has_long_induced_cycle,
    random_chordal_edges,
    random_graph,
    scenario_from_edges,
)
from test_lp import random_model  # noqa: E402

CRITERIA = {}


def criterion(number, title):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn

    return register


def timed(limit, fn, *args):
    start = time.perf_counter()
    out = fn(*args)
    elapsed = time.perf_counter() - start
    assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
    return out


@criterion(1, "classical bounds of C(n), n=4..10, and B(2m), m=2..5")
def classical_bounds():
    for n in range(4, 11):
        value, _ = timed(1, classical_bound, cycle_expression(n))
        assert value == n - 2, (n, value)
    for m in range(2, 6):
        value, _ = timed(1, classical_bound, chsh_chain_expression(m))
        assert value == 2 * m - 2, (m, value)


@criterion(2, "quantum cycle formula at n=4,5,6")
def quantum_formula():
    expected = {4: 2.828427125, 5: 3.944271910, 6: 5.196152423}
    for n, v in expected.items():
        assert abs(quantum_cycle_bound(n) - v) <= 1e-9, (n, quantum_cycle_bound(n))
    assert abs(quantum_cycle_bound(5) - (4 * math.sqrt(5) - 5)) <= 1e-9
    for n in range(4, 11):
        assert n - 2 < quantum_cycle_bound(n) < n


@criterion(3, "no-disturbance optimum of C(n)=n, n=4..7; CHSH optimum is the PR box")
def nd_bounds():
    for n in range(4, 8):
        e = cycle_expression(n)
        value, _ = timed(5, nd_maximize, e.scenario, e)
        assert value == n, (n, value)
    e = chsh_chain_expression(2)
    value, b = timed(5, nd_maximize, e.scenario, e)
    assert value == 4
    sc = e.scenario
    corr = {}
    for x, y in [("A1", "B1"), ("A2", "B1"), ("A2", "B2"), ("A1", "B2")]:
        u, v = sc.indices([x, y])
        corr[x + y] = b.marginal((u, v)).correlator(u, v)
    assert corr == {"A1B1": 1, "A2B1": 1, "A2B2": 1, "A1B2": -1}, corr


@criterion(4, "double PR-box extension is infeasible")
def prbox_extension():
    sc = three_party_scenario()

    def run():
        return solve(build_nd_lp(sc, None, double_pr_pins(sc)))

    assert timed(5, run).status == "infeasible"


@criterion(5, "CHSH_AB + CHSH_AC optimum 4; only A1 shared exceeds 4")
def chsh_monogamy():
    def run():
        both = certify(build_one_to_many([2, 2]))
        one = certify(build_one_to_many([2, 2], shared_count=1))
        return both, one

    both, one = timed(10, run)
    assert both.lp_optimum == 4 and both.verdict == MONOGAMOUS
    assert one.lp_optimum > 4 and one.verdict == NOT_MONOGAMOUS


@criterion(6, "one-to-many example B(2x4)+B(2x3)")
def one_to_many_example():
    r = timed(120, certify, build_one_to_many([4, 3]))
    assert r.classical_sum == 10
    assert [e.render() for e in r.recombined] == [
        "A1B1 + B1A2 + A2B2 + B2A3 + A3B3 + B3A4 + A4C3 - C3A1",
        "A1C1 + C1A2 + A2C2 + C2A4 + A4B4 - B4A1",
    ]
    assert r.lp_optimum == 10 and r.verdict == MONOGAMOUS


@criterion(7, "C(8) + CHSH")
def contextual_bell_example():
    r = timed(120, certify, build_contextual_bell(8))
    assert r.classical_sum == 8 == r.lp_optimum
    assert r.verdict == MONOGAMOUS


@criterion(8, "C(8) + C(11): structural certificate, LP cross-check")
def multi_cycle_example():
    inst = build_multi_cycle([8, 11])
    r = timed(120, certify, inst, 5000, False)
    assert r.classical_sum == 15 and r.structural and r.verdict == MONOGAMOUS
    assert r.recombined_classical_sum == 15
    full = certify(inst)
    assert full.lp_optimum == 15


@criterion(9, "three-party CHSH loop 6, two-link chain 4, three-link chain > 6")
def loops_and_chains():
    def run():
        return certify(build_loop([2, 2, 2])), certify(build_chain(2)), certify(build_chain(3))

    loop, chain2, chain3 = timed(300, run)
    assert loop.lp_optimum == 6 and loop.verdict == MONOGAMOUS
    assert chain2.lp_optimum == 4 and chain2.verdict == MONOGAMOUS
    assert chain3.lp_optimum > 6 and chain3.verdict == NOT_MONOGAMOUS


def _entry(table, subset, outcome):
    return table[tuple(outcome[u] for u in subset)]


@criterion(10, "glued joint reproduces every clique table; closed forms on the star and diamond")
def fine_construction():
    rng = random.Random(20240610)
    checked = 0
    while checked < 200:
        n = rng.randint(1, 8)
        sc = scenario_from_edges(n, random_chordal_edges(rng, n))
        if checked % 4 == 3 and sc.compat:
            # vertex of the polytope: sparse tables with zero separators
            pairs = sorted(sc.compat)
            lab = sc.labels
            expr = Expression.from_labels(
                "r", sc, [(lab[u], lab[v], rng.choice([-2, -1, 1, 3])) for u, v in pairs]
            )
            _, b = nd_maximize(sc, expr)
        else:
            b = behavior_from_joint(sc, random_joint(range(n), rng, sparsity=rng.choice([0, 0.3, 0.7])))
        joint = fine_joint(b)
        for c, t in b.tables.items():
            assert marginalize(joint.table, c) == t
        checked += 1

    star = Scenario.from_labels(["D1", "D2", "D3", "D4"], [("D1", "D2"), ("D3", "D2"), ("D4", "D2")])
    diamond = Scenario.from_labels(
        ["E1", "E2", "E3", "E4"], [("E1", "E2"), ("E2", "E3"), ("E3", "E4"), ("E4", "E1"), ("E2", "E4")]
    )
    for _ in range(25):
        b = behavior_from_joint(star, random_joint(range(4), rng, sparsity=0.3))
        j = fine_joint(b)
        p12, p32, p42, p2 = b.marginal((0, 1)), b.marginal((1, 2)), b.marginal((1, 3)), b.marginal((1,))
        for o in outcome_tuples(4):
            d = _entry(p2, (1,), o) ** 2
            want = 0 if d == 0 else _entry(p12, (0, 1), o) * _entry(p32, (1, 2), o) * _entry(p42, (1, 3), o) / d
            assert j.table[o] == want

        b = behavior_from_joint(diamond, random_joint(range(4), rng, sparsity=0.3))
        j = fine_joint(b)
        p124, p324, p24 = b.tables[(0, 1, 3)], b.tables[(1, 2, 3)], b.marginal((1, 3))
        for o in outcome_tuples(4):
            d = _entry(p24, (1, 3), o)
            want = 0 if d == 0 else _entry(p124, (0, 1, 3), o) * _entry(p324, (1, 2, 3), o) / d
            assert j.table[o] == want


@criterion(11, "simplex vs vertex enumeration (50 LPs); chordality vs induced-cycle search (500 graphs)")
def oracle_equivalence():
    rng = random.Random(11)
    for _ in range(50):
        model = random_model(rng, rng.randint(1, 12), rng.randint(0, 4))
        sol = solve(model)
        status, value = brute_lp(model)
        assert sol.status == status
        if status == OPTIMAL:
            assert sol.value == value
    for _ in range(500):
        n = rng.randint(1, 8)
        edges = random_graph(rng, n, rng.choice([0.2, 0.4, 0.6, 0.8]))
        g = Graph(tuple(range(n)), frozenset(edges))
        assert (is_chordal(g) is not None) == (not has_long_induced_cycle(n, edges))


def run_criterion(number):
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    try:
        fn()
    except Exception as exc:  # the caller decides how to surface it
        return False, f"criterion {number:2d} FAIL ({time.perf_counter() - start:6.2f}s) {title}: {exc!r}"
    return True, f"criterion {number:2d} PASS ({time.perf_counter() - start:6.2f}s) {title}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = run_criterion(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
