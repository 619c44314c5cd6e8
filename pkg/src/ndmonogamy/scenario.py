"""Measurement scenarios, correlator expressions and deterministic assignments.

A :class:`Scenario` is a set of dichotomic (+1/-1) measurements together with a
symmetric compatibility relation.  An :class:`Expression` is a signed sum of
two-point correlators over compatible pairs.  Everything here is immutable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

OUTCOMES = (-1, 1)


class ScenarioError(ValueError):
    """Raised for malformed scenario, expression or assignment input."""


def as_fraction(value) -> Fraction:
    """Parse an exact rational from an int, Fraction or string such as ``"-1/2"``.

    Floats are rejected: every probability and coefficient is exact.
    """
    if isinstance(value, bool):
        raise ScenarioError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ScenarioError(f"not a rational: {value!r}") from exc
    raise ScenarioError(f"not an exact rational: {value!r}")


def format_fraction(value: Fraction) -> str:
    """Render as ``"p/q"`` (or ``"p"`` for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, order=True)
class MeasurementId:
    index: int
    label: str


def _pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Scenario:
    """Measurements plus the compatible-measurement graph.

    ``compat`` holds unordered pairs as sorted index tuples.
    """

    labels: tuple[str, ...]
    compat: frozenset[tuple[int, int]]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)
    _adj: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        index = {}
        for i, lab in enumerate(labels):
            if not isinstance(lab, str) or not lab:
                raise ScenarioError(f"invalid measurement label {lab!r}")
            if lab in index:
                raise ScenarioError(f"duplicate label {lab!r}")
            index[lab] = i
        pairs = set()
        for u, v in self.compat:
            if u == v:
                raise ScenarioError(f"self-loop on measurement {labels[u] if 0 <= u < len(labels) else u}")
            if not (0 <= u < len(labels) and 0 <= v < len(labels)):
                raise ScenarioError(f"compat pair ({u}, {v}) references unknown measurement")
            pairs.add(_pair(u, v))
        adj = [set() for _ in labels]
        for u, v in pairs:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "compat", frozenset(pairs))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_adj", tuple(frozenset(a) for a in adj))

    @classmethod
    def from_labels(cls, labels: Sequence[str], compat: Iterable[Sequence[str]]) -> "Scenario":
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            dup = next(lab for lab in labels if list(labels).count(lab) > 1)
            raise ScenarioError(f"duplicate label {dup!r}")
        pairs = []
        for entry in compat:
            if len(entry) != 2:
                raise ScenarioError(f"compat entry must have two labels: {entry!r}")
            a, b = entry
            for lab in (a, b):
                if lab not in index:
                    raise ScenarioError(f"unknown label {lab!r} in compat list")
            if a == b:
                raise ScenarioError(f"self-loop on measurement {a}")
            pairs.append((index[a], index[b]))
        return cls(tuple(labels), frozenset(pairs))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def measurements(self) -> list[MeasurementId]:
        return [MeasurementId(i, lab) for i, lab in enumerate(self.labels)]

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ScenarioError(f"unknown measurement {label!r}") from None

    def indices(self, labels: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.index(lab) for lab in labels)

    def neighbors(self, u: int) -> frozenset[int]:
        return self._adj[u]

    def compatible(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def adjacency(self) -> dict[int, frozenset[int]]:
        return {u: self._adj[u] for u in range(self.size)}

    def edges_by_label(self) -> list[tuple[str, str]]:
        return sorted((self.labels[u], self.labels[v]) for u, v in sorted(self.compat))

    def to_dict(self) -> dict:
        return {
            "measurements": list(self.labels),
            "compat": [[self.labels[u], self.labels[v]] for u, v in sorted(self.compat)],
        }


def validate_scenario(raw: Mapping) -> Scenario:
    """Build a canonical :class:`Scenario` from a parsed scenario description."""
    if not isinstance(raw, Mapping):
        raise ScenarioError("scenario description must be a mapping")
    labels = raw.get("measurements")
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ScenarioError("'measurements' must be a list of label strings")
    compat = raw.get("compat", [])
    if not isinstance(compat, list):
        raise ScenarioError("'compat' must be a list of label pairs")
    return Scenario.from_labels(labels, compat)


@dataclass(frozen=True)
class Term:
    u: int
    v: int
    coeff: Fraction

    @property
    def pair(self) -> tuple[int, int]:
        return _pair(self.u, self.v)


@dataclass(frozen=True)
class Expression:
    """Signed sum of correlators ``sum coeff * <u v>`` over compatible pairs."""

    name: str
    scenario: Scenario = field(repr=False)
    terms: tuple[Term, ...]

    def __post_init__(self):
        terms = tuple(
            t if isinstance(t, Term) else Term(int(t[0]), int(t[1]), as_fraction(t[2]))
            for t in self.terms
        )
        seen = set()
        for t in terms:
            if not self.scenario.compatible(t.u, t.v):
                lab = self.scenario.labels
                raise ScenarioError(
                    f"expression {self.name!r}: pair ({lab[t.u]}, {lab[t.v]}) is not compatible"
                )
            if t.pair in seen:
                lab = self.scenario.labels
                raise ScenarioError(
                    f"expression {self.name!r}: duplicate term on ({lab[t.u]}, {lab[t.v]})"
                )
            seen.add(t.pair)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_labels(cls, name: str, scenario: Scenario, terms: Iterable[Sequence]) -> "Expression":
        return cls(
            name,
            scenario,
            tuple(Term(scenario.index(u), scenario.index(v), as_fraction(c)) for u, v, c in terms),
        )

    @property
    def measurements(self) -> tuple[int, ...]:
        """Sorted indices of the measurements appearing in some term."""
        return tuple(sorted({t.u for t in self.terms} | {t.v for t in self.terms}))

    def coefficients(self) -> dict[tuple[int, int], Fraction]:
        return {t.pair: t.coeff for t in self.terms}

    def value(self, assignment: Mapping[int, int]) -> Fraction:
        """Assignment-level value ``sum coeff * a_u * a_v``."""
        return sum((t.coeff * assignment[t.u] * assignment[t.v] for t in self.terms), Fraction(0))

    def scaled(self, factor, name: str | None = None) -> "Expression":
        factor = as_fraction(factor)
        return Expression(
            name or self.name,
            self.scenario,
            tuple(Term(t.u, t.v, t.coeff * factor) for t in self.terms),
        )

    def __add__(self, other: "Expression") -> "Expression":
        """Sum of two expressions on the same scenario; coefficients on shared pairs add."""
        if other.scenario != self.scenario:
            raise ScenarioError("cannot add expressions over different scenarios")
        order: list[tuple[int, int]] = []
        first: dict[tuple[int, int], Term] = {}
        total: dict[tuple[int, int], Fraction] = {}
        for t in self.terms + other.terms:
            if t.pair not in total:
                order.append(t.pair)
                first[t.pair] = t
                total[t.pair] = Fraction(0)
            total[t.pair] += t.coeff
        terms = tuple(Term(first[p].u, first[p].v, total[p]) for p in order if total[p] != 0)
        return Expression(f"{self.name}+{other.name}", self.scenario, terms)

    def render(self) -> str:
        """Human-readable form such as ``A1B1 + B1A2 + A2B2 - B2A1``."""
        lab = self.scenario.labels
        out = []
        for k, t in enumerate(self.terms):
            c = t.coeff
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = f"{lab[t.u]}{lab[t.v]}" if mag == 1 else f"{format_fraction(mag)}*{lab[t.u]}{lab[t.v]}"
            if k == 0:
                out.append(("-" if c < 0 else "") + body)
            else:
                out.append(f" {sign} {body}")
        return "".join(out) if out else "0"

    def to_dict(self) -> dict:
        lab = self.scenario.labels
        return {
            "name": self.name,
            "terms": [{"u": lab[t.u], "v": lab[t.v], "c": format_fraction(t.coeff)} for t in self.terms],
        }


def sum_expressions(exprs: Sequence[Expression], name: str | None = None) -> Expression:
    if not exprs:
        raise ScenarioError("cannot sum an empty list of expressions")
    total = exprs[0]
    for e in exprs[1:]:
        total = total + e
    if name is not None:
        total = Expression(name, total.scenario, total.terms)
    return total


@dataclass(frozen=True)
class Assignment:
    """Outcomes in {+1, -1} for every measurement of ``support`` (sorted indices)."""

    support: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v not in OUTCOMES for v in vals):
            raise ScenarioError(f"outcomes must be +1/-1, got {self.values!r}")
        if len(vals) != len(self.support):
            raise ScenarioError("assignment must give one outcome per measurement")
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "values", vals)

    def __getitem__(self, u: int) -> int:
        return self.values[self.support.index(u)]

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.support, self.values))

    def as_labels(self, scenario: Scenario) -> dict[str, int]:
        return {scenario.labels[u]: a for u, a in zip(self.support, self.values)}


@dataclass(frozen=True)
class Graph:
    """Plain undirected graph on integer vertices (used for experimental graphs)."""

    vertices: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    def adjacency(self) -> dict[int, set[int]]:
        adj = {v: set() for v in self.vertices}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


def experimental_graph(expr: Expression) -> Graph:
    """Vertices are the measurements in ``expr``; edges are its term pairs."""
    return Graph(expr.measurements, frozenset(t.pair for t in expr.terms))


def induced_compat_graph(scenario: Scenario, vertices: Iterable[int]) -> Graph:
    vs = tuple(sorted(set(vertices)))
    keep = set(vs)
    return Graph(vs, frozenset(p for p in scenario.compat if p[0] in keep and p[1] in keep))


def scenario_graph(scenario: Scenario) -> Graph:
    return Graph(tuple(range(scenario.size)), scenario.compat)
