"""Slow, obviously-correct reference implementations used only by the tests."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from ndmonogamy.scenario import Scenario


def adjacency_sets(n, edges):
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def has_long_induced_cycle(n, edges) -> bool:
    """Any vertex subset of size >= 4 inducing a connected 2-regular graph."""
    adj = adjacency_sets(n, edges)
    for k in range(4, n + 1):
        for sub in itertools.combinations(range(n), k):
            s = set(sub)
            if any(len(adj[v] & s) != 2 for v in sub):
                continue
            seen, stack = {sub[0]}, [sub[0]]
            while stack:
                x = stack.pop()
                for y in adj[x] & s:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if seen == s:
                return True
    return False


def is_induced_cycle(n, edges, cycle) -> bool:
    adj = adjacency_sets(n, edges)
    k = len(cycle)
    if k < 4 or len(set(cycle)) != k:
        return False
    s = set(cycle)
    for i, v in enumerate(cycle):
        if adj[v] & s != {cycle[i - 1], cycle[(i + 1) % k]}:
            return False
    return True


def brute_maximal_cliques(n, edges):
    adj = adjacency_sets(n, edges)
    cliques = []
    for k in range(1, n + 1):
        for sub in itertools.combinations(range(n), k):
            if all(b in adj[a] for a, b in itertools.combinations(sub, 2)):
                cliques.append(set(sub))
    maximal = [c for c in cliques if not any(c < d for d in cliques)]
    return sorted(tuple(sorted(c)) for c in maximal)


def random_graph(rng: random.Random, n: int, p: float):
    return [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]


def random_chordal_edges(rng: random.Random, n: int):
    """Grow a chordal graph: each new vertex attaches to a clique of earlier ones."""
    edges = set()
    adj = {0: set()}
    for v in range(1, n):
        start = rng.randrange(v)
        clique = {start}
        for u in rng.sample(range(v), v):
            if u not in clique and rng.random() < 0.6 and clique <= adj[u]:
                clique.add(u)
        if rng.random() < 0.15:
            clique = set()  # new component
        adj[v] = set(clique)
        for u in clique:
            adj[u].add(v)
            edges.add((min(u, v), max(u, v)))
    perm = list(range(n))
    rng.shuffle(perm)
    return sorted((min(perm[a], perm[b]), max(perm[a], perm[b])) for a, b in edges)


def scenario_from_edges(n, edges) -> Scenario:
    return Scenario(tuple(f"M{i}" for i in range(n)), frozenset(edges))


def brute_classical(expr):
    support = expr.measurements
    best = None
    for signs in itertools.product((-1, 1), repeat=len(support)):
        val = expr.value(dict(zip(support, signs)))
        if best is None or val > best:
            best = val
    return best


def _rref(rows, rhs, n):
    """Reduced row echelon form over the rationals; returns (rows, rhs) or None if inconsistent."""
    mat = [[Fraction(r.get(j, 0)) for j in range(n)] + [Fraction(b)] for r, b in zip(rows, rhs)]
    pivots, r = [], 0
    for c in range(n):
        p = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        piv = mat[r][c]
        mat[r] = [x / piv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
    if any(all(x == 0 for x in row[:n]) and row[n] != 0 for row in mat[r:]):
        return None
    return mat[:r], pivots


def _solve_square(mat, cols, n):
    """Solve the rank-r system restricted to ``cols``; None if singular."""
    r = len(mat)
    a = [[row[c] for c in cols] + [row[n]] for row in mat]
    for c in range(r):
        p = next((i for i in range(c, r) if a[i][c] != 0), None)
        if p is None:
            return None
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [x / piv for x in a[c]]
        for i in range(r):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return [a[i][r] for i in range(r)]


def brute_lp(model):
    """Max over all basic feasible solutions of a bounded equality-form LP.

    Returns ("infeasible", None) or ("optimal", value).
    """
    n = model.n_vars
    red = _rref(model.rows, model.rhs, n)
    if red is None:
        return "infeasible", None
    mat, _ = red
    r = len(mat)
    best = None
    for cols in itertools.combinations(range(n), r):
        xs = _solve_square(mat, cols, n)
        if xs is None or any(x < 0 for x in xs):
            continue
        x = [Fraction(0)] * n
        for c, val in zip(cols, xs):
            x[c] = val
        obj = sum((Fraction(c) * x[j] for j, c in model.objective.items()), Fraction(0))
        if best is None or obj > best:
            best = obj
    if best is None:
        return "infeasible", None
    return "optimal", best
