"""Monogamy instances, term recombination and certification.

A monogamy relation ``sum_i I_i <= sum_i R_i`` is certified two ways:

* structurally: the summed terms are regrouped into expressions that each
  live on a chordal sub-structure of the compatibility graph (so no
  no-disturbance behavior violates any of them) and whose classical bounds
  still add up to ``sum_i R_i``;
* numerically: the exact LP optimum of the sum over the no-disturbance
  polytope equals ``sum_i R_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

from .bounds import chsh_chain_terms, classical_bound
from .graphs import chordal_fill, is_chordal
from .lp import build_nd_lp, solve
from .scenario import (
    Expression,
    Graph,
    Scenario,
    ScenarioError,
    Term,
    experimental_graph,
    induced_compat_graph,
    sum_expressions,
)

MONOGAMOUS = "monogamous"
NOT_MONOGAMOUS = "not-monogamous"
UNDECIDED = "undecided-structurally"

DEFAULT_LP_CAP = 5000


@dataclass(frozen=True)
class MonogamyInstance:
    scenario: Scenario
    expressions: tuple[Expression, ...]
    shared: tuple[int, ...]
    kind: str = "custom"
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        for e in self.expressions:
            if e.scenario != self.scenario:
                raise ScenarioError(f"expression {e.name!r} is not over the instance scenario")
        counts = {}
        for e in self.expressions:
            for u in e.measurements:
                counts[u] = counts.get(u, 0) + 1
        for u in self.shared:
            if counts.get(u, 0) < 2:
                raise ScenarioError(f"shared measurement {self.scenario.labels[u]} appears in fewer than two expressions")

    @classmethod
    def from_expressions(cls, scenario, expressions, kind="custom", notes=()):
        counts = {}
        for e in expressions:
            for u in e.measurements:
                counts[u] = counts.get(u, 0) + 1
        shared = tuple(sorted(u for u, c in counts.items() if c >= 2))
        return cls(scenario, tuple(expressions), shared, kind, tuple(notes))


def party_prefix(i: int) -> str:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return letters[i] if i < len(letters) else f"P{i + 1}_"


def _spatial_scenario(parties: Sequence[Sequence[str]]) -> Scenario:
    """All cross-party pairs compatible, no within-party pairs."""
    labels = [x for p in parties for x in p]
    compat = [(x, y) for p, q in combinations(parties, 2) for x in p for y in q]
    return Scenario.from_labels(labels, compat)


def build_one_to_many(bell_sizes: Sequence[int], shared_count: int = 2) -> MonogamyInstance:
    """Alice runs a generalized CHSH test B(2 m_i) with each of k other parties.

    With ``shared_count >= 2`` every test uses A1..A_s plus the last remaining
    Alice settings of the common pool (so B(2x4) and B(2x3) share A1, A2, A4).
    With ``shared_count == 1`` only A1 is common and other settings are fresh.
    """
    if not bell_sizes:
        raise ScenarioError("need at least one Bell test")
    if any(m < 2 for m in bell_sizes):
        raise ScenarioError("each B(2m) needs m >= 2")
    if shared_count < 1 or shared_count > min(bell_sizes):
        raise ScenarioError("shared_count must lie between 1 and the smallest m_i")
    big = max(bell_sizes)
    alice_sets = []
    if shared_count == 1:
        nxt = bell_sizes[0] + 1
        alice_sets.append([f"A{j}" for j in range(1, bell_sizes[0] + 1)])
        for m in bell_sizes[1:]:
            alice_sets.append(["A1"] + [f"A{j}" for j in range(nxt, nxt + m - 1)])
            nxt += m - 1
    else:
        s = shared_count
        for m in bell_sizes:
            alice_sets.append([f"A{j}" for j in range(1, s + 1)] + [f"A{j}" for j in range(big - (m - s) + 1, big + 1)])
    alice = sorted({a for aset in alice_sets for a in aset}, key=lambda x: int(x[1:]))
    others = [[f"{party_prefix(i + 1)}{j}" for j in range(1, m + 1)] for i, m in enumerate(bell_sizes)]
    sc = _spatial_scenario([alice] + others)
    exprs = [
        Expression.from_labels(f"B_A{party_prefix(i + 1)}({2 * m})", sc, chsh_chain_terms(alice_sets[i], others[i]))
        for i, m in enumerate(bell_sizes)
    ]
    return MonogamyInstance.from_expressions(sc, exprs, kind="one-to-many")


def build_contextual_bell(n: int, shared: tuple[int, int] = (0, 1)) -> MonogamyInstance:
    """C(n) on Alice's system plus CHSH with Bob, sharing two adjacent cycle settings.

    Bob's B1, B2 are compatible with every A_i (spatial separation).
    ``shared`` holds 0-based cycle positions.
    """
    if n < 4:
        raise ScenarioError("contextual-Bell instances need n >= 4")
    i, j = shared
    if not (0 <= i < n and 0 <= j < n) or (j - i) % n not in (1, n - 1):
        raise ScenarioError("shared measurements must be adjacent in the cycle")
    if (j - i) % n != 1:
        i, j = j, i
    a = [f"A{k}" for k in range(1, n + 1)]
    b = ["B1", "B2"]
    compat = [(a[k], a[(k + 1) % n]) for k in range(n)] + [(x, y) for x in a for y in b]
    sc = Scenario.from_labels(a + b, compat)
    neg = n - 1 if i != n - 1 else n - 2
    cyc = [(a[k], a[(k + 1) % n], -1 if k == neg else 1) for k in range(n)]
    exprs = [
        Expression.from_labels(f"C({n})", sc, cyc),
        Expression.from_labels("CHSH_AB", sc, chsh_chain_terms([a[i], a[j]], b)),
    ]
    return MonogamyInstance.from_expressions(sc, exprs, kind="contextual-bell")


def build_multi_cycle(cycle_sizes: Sequence[int], shared_positions: Sequence[int] | None = None) -> MonogamyInstance:
    """k cycles C(N_i) sharing two measurements; non-shared settings of
    different cycles are pairwise compatible.

    Cycle i has settings at positions 0..N_i-1; the shared pair sits at
    positions 0 and ``shared_positions[i]`` (default ``ceil(N_i / 2)``).
    """
    if len(cycle_sizes) < 1 or any(N < 4 for N in cycle_sizes):
        raise ScenarioError("each cycle needs N_i >= 4")
    if shared_positions is None:
        shared_positions = [math.ceil(N / 2) for N in cycle_sizes]
    if len(shared_positions) != len(cycle_sizes):
        raise ScenarioError("one shared position per cycle is required")
    for N, p in zip(cycle_sizes, shared_positions):
        if not 2 <= p <= N - 2:
            raise ScenarioError("shared measurements must not be adjacent in a cycle")
    s0, s1 = "A0", f"A{shared_positions[0]}"
    cycles = []
    for c, (N, p) in enumerate(zip(cycle_sizes, shared_positions)):
        pre = party_prefix(c)
        labs = []
        for k in range(N):
            if k == 0:
                labs.append(s0)
            elif k == p:
                labs.append(s1)
            else:
                labs.append(f"{pre}{k}")
        cycles.append(labs)
    labels = []
    for labs in cycles:
        for x in labs:
            if x not in labels:
                labels.append(x)
    compat = set()
    for labs in cycles:
        for k in range(len(labs)):
            compat.add(tuple(sorted((labs[k], labs[(k + 1) % len(labs)]))))
    shared = {s0, s1}
    for c1, c2 in combinations(range(len(cycles)), 2):
        for x in cycles[c1]:
            for y in cycles[c2]:
                if x not in shared and y not in shared:
                    compat.add(tuple(sorted((x, y))))
    sc = Scenario.from_labels(labels, sorted(compat))
    exprs = []
    for labs in cycles:
        N = len(labs)
        terms = [(labs[k], labs[(k + 1) % N], -1 if k == N - 1 else 1) for k in range(N)]
        exprs.append(Expression.from_labels(f"C_{labs[1][0]}({N})", sc, terms))
    return MonogamyInstance.from_expressions(sc, exprs, kind="multi-cycle")


def _ring_parties(sizes_per_party):
    return [[f"{party_prefix(i)}{j}" for j in range(1, m + 1)] for i, m in enumerate(sizes_per_party)]


def build_loop(party_sizes: Sequence[int]) -> MonogamyInstance:
    """Generalized CHSH tests B_{i,i+1} around a ring of N >= 3 parties.

    ``party_sizes[i]`` is the m of the test between party i and party i+1
    (indices mod N); neighbouring tests share the first two settings of
    their common party.
    """
    N = len(party_sizes)
    if N < 3:
        raise ScenarioError("a loop needs at least three parties")
    if any(m < 2 for m in party_sizes):
        raise ScenarioError("each B(2m) needs m >= 2")
    per_party = [max(party_sizes[i - 1], party_sizes[i]) for i in range(N)]
    parties = _ring_parties(per_party)
    sc = _spatial_scenario(parties)
    exprs = []
    for i, m in enumerate(party_sizes):
        x, y = parties[i][:m], parties[(i + 1) % N][:m]
        name = f"B_{party_prefix(i)}{party_prefix((i + 1) % N)}({2 * m})"
        exprs.append(Expression.from_labels(name, sc, chsh_chain_terms(x, y)))
    return MonogamyInstance.from_expressions(sc, exprs, kind="loop")


def build_chain(links: int, sizes: Sequence[int] | None = None) -> MonogamyInstance:
    """CHSH_{1,2} + ... + CHSH_{L,L+1} along a chain of L + 1 parties."""
    if links < 2:
        raise ScenarioError("a chain needs at least two links")
    sizes = list(sizes) if sizes is not None else [2] * links
    if len(sizes) != links or any(m < 2 for m in sizes):
        raise ScenarioError("one size m >= 2 per link is required")
    per_party = [max(sizes[max(i - 1, 0)], sizes[min(i, links - 1)]) for i in range(links + 1)]
    parties = _ring_parties(per_party)
    sc = _spatial_scenario(parties)
    exprs = []
    for i, m in enumerate(sizes):
        name = f"CHSH_{party_prefix(i)}{party_prefix(i + 1)}" if m == 2 else f"B_{party_prefix(i)}{party_prefix(i + 1)}({2 * m})"
        exprs.append(Expression.from_labels(name, sc, chsh_chain_terms(parties[i][:m], parties[i + 1][:m])))
    notes = []
    if links % 2:
        notes.append(
            f"odd chain ({links} links): the tests cannot be split into adjacent monogamous couples, "
            "so no monogamy bound is claimed; the LP decides"
        )
    return MonogamyInstance.from_expressions(sc, exprs, kind="chain", notes=notes)


# ---------------------------------------------------------------- recombination


@dataclass(frozen=True)
class ChordalWitness:
    """Chordal graph H with experimental graph <= H <= compatibility graph."""

    fill: tuple[tuple[int, int], ...]
    peo: tuple[int, ...]


@dataclass(frozen=True)
class Recombination:
    scheme: str
    expressions: tuple[Expression, ...]
    witnesses: tuple[ChordalWitness, ...]
    groups: tuple[tuple[int, ...], ...]


def _cycle_order(expr: Expression) -> list[int] | None:
    g = experimental_graph(expr)
    adj = g.adjacency()
    if len(g.vertices) < 3 or len(g.edges) != len(g.vertices) or any(len(a) != 2 for a in adj.values()):
        return None
    start = g.vertices[0]
    order, prev = [start], None
    while True:
        cur = order[-1]
        nxt = min(x for x in adj[cur] if x != prev)
        if nxt == start:
            break
        if nxt in order:
            return None
        order.append(nxt)
        prev = cur
    return order if len(order) == len(g.vertices) else None


def _arcs(expr: Expression, order: list[int], s: int, t: int) -> tuple[list[Term], list[Term]]:
    """Split the cycle at s and t into two arcs of terms (original term order)."""
    n = len(order)
    i = order.index(s)
    arc_pairs = []
    for direction in (1, -1):
        pairs = set()
        k = i
        while True:
            nk = (k + direction) % n
            a, b = order[k], order[nk]
            pairs.add((a, b) if a < b else (b, a))
            k = nk
            if order[k] == t:
                break
        arc_pairs.append(pairs)
    return tuple([t_ for t_ in expr.terms if t_.pair in ps] for ps in arc_pairs)


def chordal_witness(expr: Expression) -> ChordalWitness | None:
    """Triangulate the experimental graph with compatible pairs only."""
    g = experimental_graph(expr)
    compat = induced_compat_graph(expr.scenario, g.vertices)
    fill = chordal_fill(g, compat)
    if fill is None:
        return None
    h = Graph(g.vertices, g.edges | fill)
    peo = is_chordal(h)
    if peo is None or not h.edges <= compat.edges:
        return None
    return ChordalWitness(tuple(sorted(fill)), peo.order)


def _bound(expr: Expression, cache: dict) -> Fraction:
    key = (tuple(sorted((t.pair, t.coeff) for t in expr.terms)),)
    if key not in cache:
        cache[key] = classical_bound(expr)[0]
    return cache[key]


def _edge_totals(exprs) -> dict:
    out: dict = {}
    for e in exprs:
        for t in e.terms:
            out[t.pair] = out.get(t.pair, 0) + t.coeff
    return {k: v for k, v in out.items() if v}


def _negatives(arc) -> int:
    return sum(1 for t in arc if t.coeff < 0)


def _group_candidates(exprs: Sequence[Expression]):
    orders = [_cycle_order(e) for e in exprs]
    if any(o is None for o in orders):
        return []
    common = set(orders[0])
    for o in orders[1:]:
        common &= set(o)
    k = len(exprs)
    cands = []
    for s, t in combinations(sorted(common), 2):
        arcs = [_arcs(e, o, s, t) for e, o in zip(exprs, orders)]
        choices = product((0, 1), repeat=k) if k <= 6 else [
            tuple(0 if _negatives(a[0]) % 2 else 1 for a in arcs)
        ]
        for choice in choices:
            moved = [arcs[i][choice[i]] for i in range(k)]
            kept = [arcs[i][1 - choice[i]] for i in range(k)]
            for direction in (1, -1) if k > 2 else (1,):
                got = [moved[(i + direction) % k] for i in range(k)]
                sizes_kept = all(len(kept[i]) + len(got[i]) == len(exprs[i].terms) for i in range(k))
                neg_moved = all(_negatives(m) % 2 == 1 for m in moved)
                # keep the longer part of each original expression in place
                keeps_major = all(len(kept[i]) >= len(moved[i]) for i in range(k))
                key = (
                    0 if sizes_kept else 1,
                    0 if keeps_major else 1,
                    0 if neg_moved else 1,
                    sum(len(m) for m in moved),
                    (s, t),
                    choice,
                    -direction,
                )
                cands.append((key, kept, got))
    cands.sort(key=lambda c: c[0])
    return cands


def _recombine_group(exprs: Sequence[Expression], cache: dict, weight=Fraction(1)):
    """Return (recombined expressions, witnesses) for one group, or None."""
    if len(exprs) == 1:
        w = chordal_witness(exprs[0])
        return ([exprs[0].scaled(weight)], [w]) if w else None
    target = sum((_bound(e, cache) for e in exprs), Fraction(0))
    seen = set()
    for _, kept, got in _group_candidates(exprs):
        sig = tuple(tuple(sorted(t.pair for t in kept[i] + got[i])) for i in range(len(exprs)))
        if sig in seen:
            continue
        seen.add(sig)
        try:
            new = [
                Expression(f"{exprs[i].name}^({i + 1})", exprs[i].scenario, tuple(kept[i] + got[i]))
                for i in range(len(exprs))
            ]
        except ScenarioError:
            continue
        if sum((_bound(e, cache) for e in new), Fraction(0)) != target:
            continue
        witnesses = []
        for e in new:
            w = chordal_witness(e)
            if w is None:
                break
            witnesses.append(w)
        else:
            if weight != 1:
                new = [e.scaled(weight) for e in new]
            return new, witnesses
    return None


def _couple_partition(n_expr: int, ok):
    """Perfect matching of expressions into couples accepted by ``ok``."""

    def go(left):
        if not left:
            return []
        first = left[0]
        for other in left[1:]:
            if ok(first, other):
                rest = go([x for x in left if x not in (first, other)])
                if rest is not None:
                    return [(first, other)] + rest
        return None

    return go(list(range(n_expr)))


def recombine(instance: MonogamyInstance) -> Recombination | None:
    """Regroup the summed terms so every new expression has a chordal witness.

    Schemes, in order: a cyclic exchange of arcs between two shared
    measurements over the whole group; a partition into exchanged couples;
    for rings, every neighbouring couple exchanged with weight 1/2 (each
    expression then appears in two couples). ``None`` means undecided.
    """
    exprs = list(instance.expressions)
    cache: dict = {}
    if len(exprs) == 1:
        res = _recombine_group(exprs, cache)
        return Recombination("single", tuple(res[0]), tuple(res[1]), ((0,),)) if res else None

    if instance.kind not in ("chain", "loop"):
        res = _recombine_group(exprs, cache)
        if res:
            return Recombination("cyclic-exchange", tuple(res[0]), tuple(res[1]), (tuple(range(len(exprs))),))

    memo: dict = {}

    def couple(i, j):
        if (i, j) not in memo:
            memo[(i, j)] = _recombine_group([exprs[i], exprs[j]], cache)
        return memo[(i, j)]

    if instance.kind != "loop":
        part = _couple_partition(len(exprs), lambda i, j: couple(i, j) is not None)
        if part:
            new, wit = [], []
            for i, j in part:
                e, w = couple(i, j)
                new += e
                wit += w
            return Recombination("couples", tuple(new), tuple(wit), tuple(part))

    k = len(exprs)
    if k >= 3:
        ring = [(i, (i + 1) % k) for i in range(k)]
        half = Fraction(1, 2)
        new, wit = [], []
        for i, j in ring:
            res = _recombine_group([exprs[i], exprs[j]], cache, weight=half)
            if res is None:
                break
            new += res[0]
            wit += res[1]
        else:
            return Recombination("doubled-ring", tuple(new), tuple(wit), tuple(ring))
    return None


# ---------------------------------------------------------------- certification


@dataclass(frozen=True)
class MonogamyReport:
    instance: MonogamyInstance = field(repr=False)
    classical_bounds: tuple[Fraction, ...]
    classical_sum: Fraction
    recombination: Recombination | None
    recombined_bounds: tuple[Fraction, ...]
    recombined_classical_sum: Fraction | None
    lp_optimum: Fraction | None
    lp_variables: int
    verdict: str
    notes: tuple[str, ...] = ()

    @property
    def recombined(self) -> tuple[Expression, ...]:
        return self.recombination.expressions if self.recombination else ()

    @property
    def structural(self) -> bool:
        return self.recombination is not None


def certify(instance: MonogamyInstance, lp_cap: int | None = DEFAULT_LP_CAP, use_lp: bool = True) -> MonogamyReport:
    """Structural certificate plus exact LP cross-check of ``sum I_i <= sum R_i``.

    The LP decides the verdict when it runs; without it a structural
    certificate alone proves monogamy and its absence leaves the case undecided.
    """
    cache: dict = {}
    bounds = tuple(_bound(e, cache) for e in instance.expressions)
    classical_sum = sum(bounds, Fraction(0))
    notes = list(instance.notes)

    rec = recombine(instance)
    rec_bounds: tuple[Fraction, ...] = ()
    rec_sum = None
    if rec is not None:
        assert _edge_totals(rec.expressions) == _edge_totals(instance.expressions), "recombination changed the terms"
        rec_bounds = tuple(_bound(e, cache) for e in rec.expressions)
        rec_sum = sum(rec_bounds, Fraction(0))
        assert rec_sum == classical_sum

    lp_opt = None
    total = sum_expressions(list(instance.expressions), name="sum")
    model = build_nd_lp(instance.scenario, total)
    n_vars = model.n_vars
    if use_lp:
        if lp_cap is not None and n_vars > lp_cap:
            notes.append(f"LP skipped: {n_vars} variables exceed the cap of {lp_cap}")
        else:
            lp_opt = solve(model).value

    if lp_opt is not None:
        if lp_opt > classical_sum:
            verdict = NOT_MONOGAMOUS
        else:
            verdict = MONOGAMOUS
            if lp_opt < classical_sum:
                notes.append("LP optimum lies strictly below the summed classical bounds")
        if rec is not None and lp_opt != classical_sum:
            notes.append("structural certificate and LP optimum disagree")
    else:
        verdict = MONOGAMOUS if rec is not None else UNDECIDED
    return MonogamyReport(
        instance, bounds, classical_sum, rec, rec_bounds, rec_sum, lp_opt, n_vars, verdict, tuple(notes)
    )


# ---------------------------------------------------------------- PR-box sharing


def three_party_scenario() -> Scenario:
    """Alice, Bob and Charlie with two settings each, all cross pairs compatible."""
    return _spatial_scenario([["A1", "A2"], ["B1", "B2"], ["C1", "C2"]])


def double_pr_pins(scenario: Scenario | None = None):
    """The eight two-party tables of Alice sharing a PR box with both Bob and
    Charlie: correlated everywhere except the anticorrelated A1B2 and A1C2."""
    from .behavior import anticorrelated_table, correlated_table

    sc = scenario or three_party_scenario()
    pins = []
    for other in ("B", "C"):
        for a, x in (("A1", "1"), ("A2", "1"), ("A2", "2"), ("A1", "2")):
            pair = tuple(sorted(sc.indices((a, f"{other}{x}"))))
            anti = a == "A1" and x == "2"
            pins.append((pair, anticorrelated_table(pair) if anti else correlated_table(pair)))
    return pins


def double_pr_triples(scenario: Scenario | None = None):
    """Three-party tables p(b, a, c) obtained by gluing the two PR boxes on A:
    every outcome is fixed by a, with b and c set by the pair's correlation sign.
    They reproduce all eight pinned pairs but disagree on the Bob-Charlie
    marginals (e.g. B1C2 from A1 versus A2)."""
    from .behavior import ProbabilityTable
    from .graphs import maximal_cliques

    sc = scenario or three_party_scenario()
    sign = {("A1", "1"): 1, ("A2", "1"): 1, ("A2", "2"): 1, ("A1", "2"): -1}
    tables = {}
    for clique in maximal_cliques(sc):
        labs = [sc.labels[u] for u in clique]
        a_lab = next(x for x in labs if x[0] == "A")
        b_lab = next(x for x in labs if x[0] == "B")
        c_lab = next(x for x in labs if x[0] == "C")
        sb, scc = sign[(a_lab, b_lab[1])], sign[(a_lab, c_lab[1])]
        entries = {}
        for a in (1, -1):
            val = {a_lab: a, b_lab: sb * a, c_lab: scc * a}
            entries[tuple(val[x] for x in labs)] = Fraction(1, 2)
        tables[clique] = ProbabilityTable(clique, entries)
    return tables
