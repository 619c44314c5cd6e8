"""Cycle and chained-CHSH expressions and their classical, quantum and
no-disturbance bounds."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .behavior import JointDistribution, evaluate_on_joint
from .graphs import is_chordal
from .scenario import Assignment, Expression, Scenario, ScenarioError, experimental_graph, induced_compat_graph

MAX_ENUMERATION = 30
_CHUNK_BITS = 16


class EnumerationCapError(ValueError):
    pass


class ChordalScenarioWarning(UserWarning):
    pass


def cycle_scenario(n: int, prefix: str = "A") -> Scenario:
    labels = [f"{prefix}{i}" for i in range(1, n + 1)]
    return Scenario.from_labels(labels, [(labels[i], labels[(i + 1) % n]) for i in range(n)])


def cycle_expression(n: int, negative_position: int | None = None, prefix: str = "A", name: str | None = None) -> Expression:
    """``sum_i gamma_i <A_i A_{i+1}>`` on the n-cycle with exactly one negative
    coefficient, by default on the closing term ``A_n A_1``."""
    if n < 3:
        raise ScenarioError("a cycle expression needs n >= 3")
    if negative_position is None:
        negative_position = n - 1
    if not 0 <= negative_position < n:
        raise ScenarioError(f"negative_position must lie in [0, {n})")
    sc = cycle_scenario(n, prefix)
    lab = sc.labels
    terms = [(lab[i], lab[(i + 1) % n], -1 if i == negative_position else 1) for i in range(n)]
    return Expression.from_labels(name or f"C({n})", sc, terms)


def chsh_chain_terms(a_labels, b_labels) -> list[tuple[str, str, int]]:
    """Terms ``A1B1 + B1A2 + A2B2 + ... + A_mB_m - B_mA1``."""
    m = len(a_labels)
    terms = []
    for i in range(m):
        terms.append((a_labels[i], b_labels[i], 1))
        if i + 1 < m:
            terms.append((b_labels[i], a_labels[i + 1], 1))
    terms.append((b_labels[-1], a_labels[0], -1))
    return terms


def chsh_chain_expression(m: int, party_labels=("A", "B"), name: str | None = None) -> Expression:
    """Generalized CHSH ``B(2m)`` on a complete bipartite (spatially separated) scenario."""
    if m < 2:
        raise ScenarioError("B(2m) needs m >= 2")
    pa, pb = party_labels
    a = [f"{pa}{i}" for i in range(1, m + 1)]
    b = [f"{pb}{i}" for i in range(1, m + 1)]
    sc = Scenario.from_labels(a + b, [(x, y) for x in a for y in b])
    return Expression.from_labels(name or f"B({2 * m})", sc, chsh_chain_terms(a, b))


def classical_bound(expr: Expression) -> tuple[Fraction, list[Assignment]]:
    """Exact maximum over all deterministic assignments of the expression's
    measurements, with every maximiser in lexicographic order (-1 < +1)."""
    support = expr.measurements
    v = len(support)
    if v > MAX_ENUMERATION:
        raise EnumerationCapError(
            f"{v} measurements exceed the enumeration cap of {MAX_ENUMERATION}; use the LP relaxation instead"
        )
    if not expr.terms:
        return Fraction(0), [Assignment(support, (-1,) * v)]
    denom = lcm(*(t.coeff.denominator for t in expr.terms))
    pos = {u: k for k, u in enumerate(support)}
    iu = np.array([pos[t.u] for t in expr.terms])
    iv = np.array([pos[t.v] for t in expr.terms])
    w = np.array([int(t.coeff * denom) for t in expr.terms], dtype=object)
    if all(abs(int(x)) < 2**40 for x in w):
        w = w.astype(np.int64)

    best = None
    argmax: list[int] = []
    chunk = min(v, _CHUNK_BITS)
    low = np.arange(2**chunk, dtype=np.int64)
    shifts = np.arange(v - 1, -1, -1, dtype=np.int64)
    for hi in range(2 ** (v - chunk)):
        codes = (np.int64(hi) << chunk) | low
        signs = ((codes[:, None] >> shifts[None, :]) & 1) * 2 - 1
        vals = (signs[:, iu] * signs[:, iv]) @ w
        m = vals.max()
        if best is None or m > best:
            best = m
            argmax = []
        if m == best:
            argmax.extend(int(c) for c in codes[vals == best])
    assignments = [Assignment(support, tuple(1 if (c >> (v - 1 - k)) & 1 else -1 for k in range(v))) for c in argmax]
    return Fraction(int(best), denom), assignments


def cycle_shape(expr: Expression) -> int | None:
    """Length n if ``expr`` is a +-1 n-cycle with an odd number of negative signs."""
    g = experimental_graph(expr)
    n = len(g.vertices)
    if n < 3 or len(g.edges) != n:
        return None
    adj = g.adjacency()
    if any(len(a) != 2 for a in adj.values()):
        return None
    start = g.vertices[0]
    seen, prev, cur = {start}, None, start
    while True:
        nxt = next(x for x in sorted(adj[cur]) if x != prev)
        if nxt == start:
            break
        if nxt in seen:
            return None
        seen.add(nxt)
        prev, cur = cur, nxt
    if len(seen) != n:
        return None
    if any(abs(t.coeff) != 1 for t in expr.terms):
        return None
    if sum(1 for t in expr.terms if t.coeff < 0) % 2 == 0:
        return None
    return n


def quantum_cycle_bound(n: int) -> float:
    """Closed-form Tsirelson value of the n-cycle expression (n >= 4)."""
    if n < 4:
        raise ValueError("the closed-form quantum bound is stated for n >= 4 only")
    c = math.cos(math.pi / n)
    if n % 2:
        return (3 * n * c - n) / (1 + c)
    return n * c


def nd_cycle_bound(n: int) -> Fraction:
    """No-disturbance bound ``n`` of the n-cycle. For n = 3 the triangle is
    chordal, so the true optimum is the classical value 1; a warning says so."""
    if n < 3:
        raise ValueError("n must be >= 3")
    if n == 3:
        warnings.warn(
            "the 3-cycle compatibility graph is chordal; the no-disturbance optimum equals the classical bound 1",
            ChordalScenarioWarning,
            stacklevel=2,
        )
    return Fraction(n)


@dataclass(frozen=True)
class BoundsReport:
    classical: Fraction
    quantum: float | None
    no_disturbance: Fraction | None
    argmax_assignments: tuple[Assignment, ...]
    nd_source: str = ""


def bounds_report(expr: Expression, lp_cap: int | None = 5000, use_lp: bool = True) -> BoundsReport:
    """Classical bound by enumeration; quantum formula for cycle-shaped
    expressions; no-disturbance bound from the LP when within ``lp_cap``."""
    from .lp import build_nd_lp, solve

    classical, argmax = classical_bound(expr)
    n = cycle_shape(expr)
    quantum = quantum_cycle_bound(n) if n is not None and n >= 4 else None
    nd, source = None, ""
    if use_lp:
        model = build_nd_lp(expr.scenario, expr)
        if lp_cap is None or model.n_vars <= lp_cap:
            nd, source = solve(model).value, "lp"
    if nd is None and n is not None:
        g = induced_compat_graph(expr.scenario, expr.measurements)
        if g.edges == experimental_graph(expr).edges and n >= 4:
            nd, source = nd_cycle_bound(n), "closed-form"
    if quantum is not None and nd is not None and is_chordal(induced_compat_graph(expr.scenario, expr.measurements)):
        # a chordal context structure admits no violation at all
        quantum = None
    return BoundsReport(classical, quantum, nd, tuple(argmax), source)


@dataclass(frozen=True)
class JointBoundCheck:
    value: Fraction
    bound: Fraction
    holds: bool

    @property
    def margin(self) -> Fraction:
        return self.bound - self.value


def check_joint_against_classical(joint: JointDistribution, expr: Expression) -> JointBoundCheck:
    """A global joint can never beat the classical bound; report the margin."""
    value = evaluate_on_joint(expr, joint)
    bound, _ = classical_bound(expr)
    return JointBoundCheck(value, bound, value <= bound)
