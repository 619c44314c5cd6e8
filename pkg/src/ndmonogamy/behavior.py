"""Probability tables, no-disturbance behaviors and clique-tree joints."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

from .graphs import NotChordalError, chordality_certificate, clique_tree, maximal_cliques
from .scenario import OUTCOMES, Expression, Scenario, ScenarioError, as_fraction

ZERO = Fraction(0)


class BehaviorError(ValueError):
    pass


def outcome_tuples(k: int) -> list[tuple[int, ...]]:
    """All outcome tuples of length k, lexicographic with -1 < +1."""
    return list(product(OUTCOMES, repeat=k))


def outcome_string(outcome: Sequence[int]) -> str:
    return "".join("+" if a == 1 else "-" for a in outcome)


def parse_outcome(text: str) -> tuple[int, ...]:
    if any(ch not in "+-" for ch in text):
        raise BehaviorError(f"bad outcome string {text!r}")
    return tuple(1 if ch == "+" else -1 for ch in text)


@dataclass(frozen=True)
class ProbabilityTable:
    support: tuple[int, ...]
    entries: Mapping[tuple[int, ...], Fraction] = field(hash=False)

    def __post_init__(self):
        support = tuple(self.support)
        if list(support) != sorted(set(support)):
            raise BehaviorError(f"support must be sorted and distinct: {support}")
        full = {}
        for o in outcome_tuples(len(support)):
            full[o] = as_fraction(self.entries.get(o, 0))
        extra = set(self.entries) - set(full)
        if extra:
            raise BehaviorError(f"outcome tuples {sorted(extra)} do not match support size {len(support)}")
        if any(p < 0 for p in full.values()):
            raise BehaviorError("negative probability")
        total = sum(full.values(), ZERO)
        if total != 1:
            raise BehaviorError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "entries", full)

    def __getitem__(self, outcome) -> Fraction:
        return self.entries[tuple(outcome)]

    def __eq__(self, other):
        if not isinstance(other, ProbabilityTable):
            return NotImplemented
        return self.support == other.support and dict(self.entries) == dict(other.entries)

    def __hash__(self):
        return hash((self.support, tuple(sorted(self.entries.items()))))

    @classmethod
    def uniform(cls, support: Sequence[int]) -> "ProbabilityTable":
        support = tuple(sorted(support))
        n = 2 ** len(support)
        return cls(support, {o: Fraction(1, n) for o in outcome_tuples(len(support))})

    @classmethod
    def point_mass(cls, support: Sequence[int], outcome: Sequence[int]) -> "ProbabilityTable":
        return cls(tuple(support), {tuple(outcome): Fraction(1)})

    def marginal(self, subset: Iterable[int]) -> "ProbabilityTable":
        return marginalize(self, subset)

    def correlator(self, u: int, v: int) -> Fraction:
        i, j = self.support.index(u), self.support.index(v)
        return sum((o[i] * o[j] * p for o, p in self.entries.items()), ZERO)


def marginalize(table: ProbabilityTable, subset: Iterable[int]) -> ProbabilityTable:
    """Sum out every measurement not in ``subset``."""
    subset = tuple(sorted(set(subset)))
    if not set(subset) <= set(table.support):
        raise BehaviorError(f"subset {subset} is not contained in support {table.support}")
    pos = [table.support.index(u) for u in subset]
    out = {o: ZERO for o in outcome_tuples(len(subset))}
    for o, p in table.entries.items():
        out[tuple(o[i] for i in pos)] += p
    return ProbabilityTable(subset, out)


@dataclass(frozen=True)
class Violation:
    cliques: tuple[tuple[int, ...], tuple[int, ...]]
    intersection: tuple[int, ...]
    differences: tuple[tuple[tuple[int, ...], Fraction, Fraction], ...]


def check_no_disturbance(scenario: Scenario, tables: Mapping[tuple[int, ...], ProbabilityTable]) -> list[Violation]:
    """Compare the marginals of every pair of clique tables on their overlap.

    Returns the (possibly empty) list of violations.
    """
    cliques = maximal_cliques(scenario)
    missing = [c for c in cliques if c not in tables]
    if missing:
        lab = scenario.labels
        raise BehaviorError("missing clique table for " + ", ".join("{" + ",".join(lab[u] for u in c) + "}" for c in missing))
    violations = []
    for c1, c2 in combinations(cliques, 2):
        inter = tuple(sorted(set(c1) & set(c2)))
        if not inter:
            continue
        m1 = marginalize(tables[c1], inter)
        m2 = marginalize(tables[c2], inter)
        diffs = tuple((o, m1[o], m2[o]) for o in outcome_tuples(len(inter)) if m1[o] != m2[o])
        if diffs:
            violations.append(Violation((c1, c2), inter, diffs))
    return violations


@dataclass(frozen=True)
class Behavior:
    """A point of the no-disturbance polytope: one table per maximal clique."""

    scenario: Scenario
    tables: Mapping[tuple[int, ...], ProbabilityTable] = field(hash=False)

    def __post_init__(self):
        tables = dict(self.tables)
        cliques = maximal_cliques(self.scenario)
        if sorted(tables) != cliques:
            raise BehaviorError("table supports must be exactly the maximal cliques of the scenario")
        for c, t in tables.items():
            if t.support != c:
                raise BehaviorError(f"table keyed {c} has support {t.support}")
        violations = check_no_disturbance(self.scenario, tables)
        if violations:
            v = violations[0]
            lab = self.scenario.labels
            raise BehaviorError(
                "no-disturbance violated on {" + ",".join(lab[u] for u in v.intersection) + "}"
            )
        object.__setattr__(self, "tables", {c: tables[c] for c in cliques})

    def containing(self, subset: Iterable[int]) -> list[tuple[int, ...]]:
        s = set(subset)
        return [c for c in self.tables if s <= set(c)]

    def marginal(self, subset: Iterable[int]) -> ProbabilityTable:
        subset = tuple(sorted(set(subset)))
        holders = self.containing(subset)
        if not holders:
            raise BehaviorError(f"no context contains {subset}")
        return marginalize(self.tables[holders[0]], subset)


def correlator(behavior: Behavior, u: int, v: int) -> Fraction:
    """``<uv> = sum a*b*p(a,b)`` from the first maximal clique holding the pair."""
    if not behavior.scenario.compatible(u, v):
        lab = behavior.scenario.labels
        raise BehaviorError(f"({lab[u]}, {lab[v]}) is not a compatibility edge")
    return behavior.marginal((u, v)).correlator(u, v)


def evaluate_expression(expr: Expression, behavior: Behavior) -> Fraction:
    return sum((t.coeff * correlator(behavior, t.u, t.v) for t in expr.terms), ZERO)


@dataclass(frozen=True)
class JointDistribution:
    table: ProbabilityTable

    @property
    def support(self):
        return self.table.support


def evaluate_on_joint(expr: Expression, joint: JointDistribution | ProbabilityTable) -> Fraction:
    """Expectation of the assignment-level value of ``expr`` under ``joint``."""
    table = joint.table if isinstance(joint, JointDistribution) else joint
    pos = {u: i for i, u in enumerate(table.support)}
    missing = [u for u in expr.measurements if u not in pos]
    if missing:
        raise BehaviorError(f"joint support does not cover measurements {missing}")
    total = ZERO
    for o, p in table.entries.items():
        if p:
            total += p * sum((t.coeff * o[pos[t.u]] * o[pos[t.v]] for t in expr.terms), ZERO)
    return total


def fine_joint(behavior: Behavior, max_measurements: int = 20) -> JointDistribution:
    """Glue the clique tables of a chordal scenario into one joint distribution.

    Product of clique entries over product of separator marginals along a
    clique tree; entries over a zero separator are 0.
    """
    scenario = behavior.scenario
    peo, cycle = chordality_certificate(scenario)
    if peo is None:
        labs = [behavior.scenario.labels[u] for u in cycle]
        raise NotChordalError(cycle, f"compatibility graph is not chordal; induced cycle {' - '.join(labs)}")
    if scenario.size > max_measurements:
        raise BehaviorError(f"joint over {scenario.size} measurements exceeds cap {max_measurements}")
    tree = clique_tree(scenario, peo)
    plan = []
    for node, parent, sep in tree.rooted_order():
        clique = tree.nodes[node]
        sep_table = marginalize(behavior.tables[clique], sep) if parent is not None else None
        plan.append((clique, sep, sep_table))
    n = scenario.size
    entries = {}
    for o in outcome_tuples(n):
        p = Fraction(1)
        for clique, sep, sep_table in plan:
            p *= behavior.tables[clique][tuple(o[u] for u in clique)]
            if p == 0:
                break
            if sep_table is not None:
                p /= sep_table[tuple(o[u] for u in sep)]
        entries[o] = p
    return JointDistribution(ProbabilityTable(tuple(range(n)), entries))


def behavior_from_joint(scenario: Scenario, joint: JointDistribution | ProbabilityTable) -> Behavior:
    table = joint.table if isinstance(joint, JointDistribution) else joint
    return Behavior(scenario, {c: marginalize(table, c) for c in maximal_cliques(scenario)})


def deterministic_behavior(scenario: Scenario, assignment: Sequence[int]) -> Behavior:
    return Behavior(
        scenario,
        {c: ProbabilityTable.point_mass(c, [assignment[u] for u in c]) for c in maximal_cliques(scenario)},
    )


def uniform_behavior(scenario: Scenario) -> Behavior:
    return Behavior(scenario, {c: ProbabilityTable.uniform(c) for c in maximal_cliques(scenario)})


def random_joint(support: Sequence[int], rng: random.Random, max_weight: int = 10, sparsity: float = 0.0) -> JointDistribution:
    """Random rational joint: integer weights normalised (some zeroed with prob. ``sparsity``)."""
    support = tuple(sorted(support))
    weights = {}
    for o in outcome_tuples(len(support)):
        weights[o] = 0 if rng.random() < sparsity else rng.randint(0, max_weight)
    if not any(weights.values()):
        weights[outcome_tuples(len(support))[0]] = 1
    total = sum(weights.values())
    return JointDistribution(ProbabilityTable(support, {o: Fraction(w, total) for o, w in weights.items()}))


def random_behavior(scenario: Scenario, rng: random.Random, **kw) -> Behavior:
    """No-disturbance by construction: marginals of a random global joint."""
    return behavior_from_joint(scenario, random_joint(range(scenario.size), rng, **kw))


PR_LABELS = ("A1", "A2", "B1", "B2")


def correlated_table(support: Sequence[int]) -> ProbabilityTable:
    return ProbabilityTable(tuple(support), {(1, 1): Fraction(1, 2), (-1, -1): Fraction(1, 2)})


def anticorrelated_table(support: Sequence[int]) -> ProbabilityTable:
    return ProbabilityTable(tuple(support), {(1, -1): Fraction(1, 2), (-1, 1): Fraction(1, 2)})


def pr_box() -> Behavior:
    """The Popescu-Rohrlich box on the two-party, two-setting scenario."""
    sc = Scenario.from_labels(PR_LABELS, [(a, b) for a in ("A1", "A2") for b in ("B1", "B2")])
    a1, a2, b1, b2 = sc.indices(PR_LABELS)
    tables = {
        (a1, b1): correlated_table((a1, b1)),
        (a2, b1): correlated_table((a2, b1)),
        (a2, b2): correlated_table((a2, b2)),
        (a1, b2): anticorrelated_table((a1, b2)),
    }
    return Behavior(sc, tables)


def table_from_labels(scenario: Scenario, labels: Sequence[str], entries: Mapping[str, object]) -> ProbabilityTable:
    """Build a table from outcome strings (ordered like ``labels``) to rationals."""
    idx = scenario.indices(labels)
    order = sorted(range(len(idx)), key=lambda k: idx[k])
    out = {}
    for key, val in entries.items():
        o = parse_outcome(key)
        if len(o) != len(idx):
            raise BehaviorError(f"outcome {key!r} does not match {len(idx)} measurements")
        out[tuple(o[k] for k in order)] = as_fraction(val)
    try:
        return ProbabilityTable(tuple(sorted(idx)), out)
    except ScenarioError as exc:
        raise BehaviorError(str(exc)) from exc
