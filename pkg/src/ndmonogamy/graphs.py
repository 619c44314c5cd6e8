"""Chordality certificates, maximal cliques and clique trees.

Graphs are accepted as a :class:`~ndmonogamy.scenario.Graph`, a
:class:`~ndmonogamy.scenario.Scenario` or a plain adjacency mapping
``{vertex: iterable of neighbours}`` over integer vertices.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

from .scenario import Graph, Scenario


class GraphError(ValueError):
    pass


class NotChordalError(GraphError):
    """Raised where a chordal graph is required; carries an induced cycle."""

    def __init__(self, cycle, message=None):
        self.cycle = tuple(cycle)
        super().__init__(message or f"graph is not chordal; induced cycle {list(self.cycle)}")


def adjacency(graph) -> dict[int, frozenset[int]]:
    if isinstance(graph, Scenario):
        return graph.adjacency()
    if isinstance(graph, Graph):
        return {v: frozenset(n) for v, n in graph.adjacency().items()}
    if isinstance(graph, Mapping):
        adj = {v: set(ns) for v, ns in graph.items()}
        for v, ns in list(adj.items()):
            for u in ns:
                if u == v:
                    raise GraphError(f"self-loop at {v}")
                adj.setdefault(u, set()).add(v)
        return {v: frozenset(ns) for v, ns in adj.items()}
    raise TypeError(f"unsupported graph type {type(graph).__name__}")


@dataclass(frozen=True)
class PerfectEliminationOrdering:
    order: tuple[int, ...]

    def later_neighbors(self, adj) -> dict[int, set[int]]:
        pos = {v: i for i, v in enumerate(self.order)}
        return {v: {u for u in adj[v] if pos[u] > pos[v]} for v in self.order}

    def is_valid(self, graph) -> bool:
        adj = adjacency(graph)
        if sorted(self.order) != sorted(adj):
            return False
        for v, later in self.later_neighbors(adj).items():
            for a, b in combinations(sorted(later), 2):
                if b not in adj[a]:
                    return False
        return True


def mcs_order(adj: Mapping[int, frozenset[int]]) -> list[int]:
    """Maximum-cardinality search visit order, lowest vertex wins ties."""
    weight = {v: 0 for v in adj}
    visited: list[int] = []
    remaining = set(adj)
    while remaining:
        v = min(remaining, key=lambda x: (-weight[x], x))
        remaining.discard(v)
        visited.append(v)
        for u in adj[v]:
            if u in remaining:
                weight[u] += 1
    return visited


def is_chordal(graph) -> PerfectEliminationOrdering | None:
    """Return a verified perfect elimination ordering, or ``None`` if not chordal."""
    adj = adjacency(graph)
    peo = PerfectEliminationOrdering(tuple(reversed(mcs_order(adj))))
    return peo if peo.is_valid(adj) else None


def _shortest_path(adj, src, dst, allowed) -> list[int] | None:
    prev = {src: None}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        if x == dst:
            path = [x]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        for y in sorted(adj[x]):
            if y not in prev and (y in allowed or y == dst):
                prev[y] = x
                queue.append(y)
    return None


def induced_cycle(graph) -> tuple[int, ...] | None:
    """Find a chordless cycle of length >= 4, or ``None`` for chordal graphs.

    For each vertex ``v`` and non-adjacent neighbour pair ``u, w``, a shortest
    ``u``-``w`` path avoiding the rest of ``N[v]`` closes an induced cycle.
    """
    adj = adjacency(graph)
    for v in sorted(adj):
        closed = adj[v] | {v}
        allowed = set(adj) - closed
        for u, w in combinations(sorted(adj[v]), 2):
            if w in adj[u]:
                continue
            path = _shortest_path(adj, u, w, allowed)
            if path is not None:
                return (v, *path)
    return None


def chordality_certificate(graph):
    """``(peo, None)`` for chordal graphs, ``(None, cycle)`` otherwise."""
    peo = is_chordal(graph)
    if peo is not None:
        return peo, None
    cycle = induced_cycle(graph)
    assert cycle is not None, "MCS rejected a graph with no induced cycle"
    return None, cycle


def maximal_cliques(graph) -> list[tuple[int, ...]]:
    """All inclusion-maximal cliques, each sorted, list sorted lexicographically.

    Bron-Kerbosch with pivoting; the pivot maximises neighbours inside the
    candidate set, lowest vertex on ties.
    """
    adj = adjacency(graph)
    out: list[tuple[int, ...]] = []

    def expand(r: list[int], p: set[int], x: set[int]):
        if not p and not x:
            out.append(tuple(sorted(r)))
            return
        pivot = min(p | x, key=lambda u: (-len(p & adj[u]), u))
        for v in sorted(p - adj[pivot]):
            expand(r + [v], p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    if adj:
        expand([], set(adj), set())
    return sorted(out)


@dataclass(frozen=True)
class CliqueTree:
    nodes: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int, tuple[int, ...]], ...]

    def neighbors(self, i: int) -> list[tuple[int, tuple[int, ...]]]:
        out = []
        for a, b, sep in self.edges:
            if a == i:
                out.append((b, sep))
            elif b == i:
                out.append((a, sep))
        return out

    def is_tree(self) -> bool:
        n = len(self.nodes)
        if len(self.edges) != max(n - 1, 0):
            return False
        if n == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j, _ in self.neighbors(i):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == n

    def has_running_intersection(self) -> bool:
        """Every vertex's containing nodes induce a connected subtree."""
        verts = {v for c in self.nodes for v in c}
        for v in verts:
            holders = {i for i, c in enumerate(self.nodes) if v in c}
            start = min(holders)
            seen = {start}
            stack = [start]
            while stack:
                i = stack.pop()
                for j, _ in self.neighbors(i):
                    if j in holders and j not in seen:
                        seen.add(j)
                        stack.append(j)
            if seen != holders:
                return False
        return True

    def rooted_order(self) -> list[tuple[int, int | None, tuple[int, ...]]]:
        """Breadth-first ``(node, parent, separator)`` triples from node 0."""
        if not self.nodes:
            return []
        order = [(0, None, ())]
        seen = {0}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j, sep in sorted(self.neighbors(i)):
                if j not in seen:
                    seen.add(j)
                    order.append((j, i, sep))
                    queue.append(j)
        return order


def clique_tree(graph, peo: PerfectEliminationOrdering) -> CliqueTree:
    """Maximum-weight spanning tree of the clique intersection graph.

    Weights are separator sizes; ties go to the lexicographically smaller
    clique pair. Components are joined through empty separators.
    """
    adj = adjacency(graph)
    if not peo.is_valid(adj):
        raise GraphError("not a perfect elimination ordering")
    pos = {v: i for i, v in enumerate(peo.order)}
    candidates = {tuple(sorted({v} | {u for u in adj[v] if pos[u] > pos[v]})) for v in peo.order}
    sets = [frozenset(c) for c in candidates]
    nodes = sorted(c for c in candidates if not any(frozenset(c) < s for s in sets))

    pairs = []
    for i, j in combinations(range(len(nodes)), 2):
        sep = tuple(sorted(set(nodes[i]) & set(nodes[j])))
        pairs.append((-len(sep), i, j, sep))
    pairs.sort()
    parent = list(range(len(nodes)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges = []
    for _, i, j, sep in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j, sep))
    return CliqueTree(tuple(nodes), tuple(edges))


def chordal_fill(graph, allowed, budget: int = 20000) -> frozenset[tuple[int, int]] | None:
    """Find fill edges making ``graph`` chordal using only edges of ``allowed``.

    Searches elimination orders; the eliminated-set graph depends only on which
    vertices are gone, so failed subsets are memoised. Returns ``None`` if no
    such triangulation exists (or the search budget runs out).
    """
    adj = adjacency(graph)
    ok = adjacency(allowed)
    verts = frozenset(adj)
    dead: set[frozenset[int]] = set()
    steps = 0

    def current_adj(gone: frozenset[int], v: int) -> set[int]:
        # vertices reachable from v through eliminated vertices
        seen = {v}
        stack = [v]
        out = set()
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in seen:
                    continue
                seen.add(y)
                if y in gone:
                    stack.append(y)
                else:
                    out.add(y)
        return out

    def search(gone: frozenset[int]) -> list[int] | None:
        nonlocal steps
        if len(verts) - len(gone) <= 1:
            return []
        if gone in dead:
            return None
        steps += 1
        if steps > budget:
            return None
        for v in sorted(verts - gone):
            nb = current_adj(gone, v)
            if all(b in ok.get(a, ()) for a, b in combinations(nb, 2)):
                rest = search(gone | {v})
                if rest is not None:
                    return [v] + rest
        dead.add(gone)
        return None

    order = search(frozenset())
    if order is None:
        return None
    fill = set()
    gone: frozenset[int] = frozenset()
    for v in order:
        nb = current_adj(gone, v)
        for a, b in combinations(sorted(nb), 2):
            if b not in adj[a]:
                fill.add((a, b) if a < b else (b, a))
        gone = gone | {v}
    return frozenset(fill)
