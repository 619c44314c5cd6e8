"""Exact rational linear programming over the no-disturbance polytope.

The solver is a two-phase primal simplex on a sparse tableau with Bland's
smallest-index rule, so it always terminates and its pivots are reproducible.
Arithmetic runs on ``gmpy2.mpq`` when available and falls back to
:class:`fractions.Fraction`; inputs and outputs are Fractions either way.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .behavior import Behavior, ProbabilityTable, outcome_tuples
from .graphs import maximal_cliques
from .scenario import Expression, Scenario

try:  # pragma: no cover - import guard
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LPError(ValueError):
    pass


class InfeasibleError(LPError):
    def __init__(self, message, hint=()):
        super().__init__(message)
        self.hint = tuple(hint)


class LPCapError(LPError):
    """Model exceeds the configured variable cap."""


@dataclass
class LPModel:
    """``maximize objective . x  s.t.  rows . x = rhs,  x >= 0``.

    Rows and objective are sparse ``{column: Fraction}`` maps.
    """

    variables: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    row_names: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    # bookkeeping for nd models
    cliques: list = field(default_factory=list)
    offsets: dict = field(default_factory=dict)
    scenario: Scenario | None = None

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def add_row(self, coeffs: Mapping[int, Fraction], rhs, name: str = ""):
        for j in coeffs:
            if not 0 <= j < self.n_vars:
                raise LPError(f"row {name!r} references unknown variable {j}")
        self.rows.append({j: Fraction(c) for j, c in coeffs.items() if c != 0})
        self.rhs.append(Fraction(rhs))
        self.row_names.append(name or f"row{len(self.rows) - 1}")


@dataclass(frozen=True)
class LPSolution:
    status: str
    value: Fraction | None = None
    x: tuple[Fraction, ...] | None = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _to_fraction(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    return Fraction(int(q.numerator), int(q.denominator))


class _Tableau:
    """Sparse simplex tableau; artificial columns are dropped once they leave."""

    def __init__(self, rows, rhs, n):
        self.n = n
        self.rows = []
        self.rhs = []
        for r, b in zip(rows, rhs):
            b = _Q(b.numerator, b.denominator)
            row = {j: _Q(c.numerator, c.denominator) for j, c in r.items()}
            if b < 0:
                b = -b
                row = {j: -c for j, c in row.items()}
            self.rows.append(row)
            self.rhs.append(b)
        m = len(self.rows)
        # basic variable per row; artificial of row i is n + i
        self.basis = [n + i for i in range(m)]
        self.cols: dict[int, set[int]] = {}
        for i, row in enumerate(self.rows):
            for j in row:
                self.cols.setdefault(j, set()).add(i)
        self.alive = [True] * m
        self.pivots = 0

    def pivot(self, r: int, e: int, cost: dict, value_box: list):
        row = self.rows[r]
        inv = 1 / row[e]
        if inv != 1:
            for j in row:
                row[j] *= inv
            self.rhs[r] *= inv
        b = self.rhs[r]
        for i in list(self.cols.get(e, ())):
            if i == r:
                continue
            target = self.rows[i]
            f = target[e]
            for j, a in row.items():
                nv = target.get(j)
                if nv is None:
                    target[j] = -f * a
                    self.cols.setdefault(j, set()).add(i)
                else:
                    nv -= f * a
                    if nv:
                        target[j] = nv
                    else:
                        del target[j]
                        self.cols[j].discard(i)
            if b:
                self.rhs[i] -= f * b
        f = cost.get(e)
        if f:
            for j, a in row.items():
                nv = cost.get(j, 0) - f * a
                if nv:
                    cost[j] = nv
                else:
                    cost.pop(j, None)
            value_box[0] -= f * b
        self.basis[r] = e
        self.pivots += 1

    def leaving(self, e: int) -> int | None:
        best = None
        best_ratio = None
        for i in self.cols.get(e, ()):
            a = self.rows[i][e]
            if a > 0:
                ratio = self.rhs[i] / a
                if best is None or ratio < best_ratio or (ratio == best_ratio and self.basis[i] < self.basis[best]):
                    best, best_ratio = i, ratio
        return best

    def run(self, cost: dict, value_box: list) -> str:
        """Minimise ``cost``; reduced costs live in ``cost`` (absent = 0)."""
        while True:
            e = None
            for j, d in cost.items():
                if d < 0 and j < self.n and (e is None or j < e):
                    e = j
            if e is None:
                return OPTIMAL
            r = self.leaving(e)
            if r is None:
                return UNBOUNDED
            self.pivot(r, e, cost, value_box)

    def drop_row(self, i: int):
        for j in self.rows[i]:
            self.cols[j].discard(i)
        self.rows[i] = {}
        self.alive[i] = False


def solve(model: LPModel) -> LPSolution:
    """Two-phase exact simplex with Bland's rule."""
    n = model.n_vars
    tab = _Tableau(model.rows, model.rhs, n)
    m = len(tab.rows)

    # phase I: minimise the sum of artificials
    cost: dict = {}
    value = [_Q(0)]
    for i, row in enumerate(tab.rows):
        for j, a in row.items():
            cost[j] = cost.get(j, 0) - a
        value[0] -= tab.rhs[i]
    cost = {j: d for j, d in cost.items() if d}
    tab.run(cost, value)
    if any(tab.rhs[i] != 0 for i in range(m) if tab.basis[i] >= n):
        return LPSolution(INFEASIBLE, pivots=tab.pivots)

    # drive zero-level artificials out; rows with no structural entry are redundant
    for i in range(m):
        if tab.basis[i] >= n:
            row = tab.rows[i]
            if row:
                e = min(row)
                tab.pivot(i, e, {}, [_Q(0)])
            else:
                tab.drop_row(i)

    # phase II: maximise objective, i.e. minimise its negation
    cost = {j: -_Q(c.numerator, c.denominator) for j, c in model.objective.items() if c}
    value = [_Q(0)]
    for i in range(m):
        if not tab.alive[i]:
            continue
        f = cost.get(tab.basis[i])
        if f:
            for j, a in tab.rows[i].items():
                nv = cost.get(j, 0) - f * a
                if nv:
                    cost[j] = nv
                else:
                    cost.pop(j, None)
            value[0] -= f * tab.rhs[i]
    status = tab.run(cost, value)
    if status == UNBOUNDED:
        return LPSolution(UNBOUNDED, pivots=tab.pivots)
    x = [Fraction(0)] * n
    for i in range(m):
        if tab.alive[i] and tab.basis[i] < n:
            x[tab.basis[i]] = _to_fraction(tab.rhs[i])
    obj = sum((c * x[j] for j, c in model.objective.items()), Fraction(0))
    assert obj == _to_fraction(value[0]), "objective bookkeeping drifted"
    return LPSolution(OPTIMAL, obj, tuple(x), tab.pivots)


def check_solution(model: LPModel, sol: LPSolution) -> bool:
    """Exact feasibility check of an optimal solution against every row."""
    if not sol.optimal:
        return False
    if any(v < 0 for v in sol.x):
        return False
    for row, b in zip(model.rows, model.rhs):
        if sum((c * sol.x[j] for j, c in row.items()), Fraction(0)) != b:
            return False
    return True


def _label_set(scenario: Scenario, members) -> str:
    return "{" + ",".join(scenario.labels[u] for u in members) + "}"


def _outcome_str(o) -> str:
    return "".join("+" if a == 1 else "-" for a in o)


def build_nd_lp(
    scenario: Scenario,
    objective: Expression | None = None,
    pins: Sequence[tuple[Sequence[int], ProbabilityTable]] | Sequence[ProbabilityTable] = (),
    reverse_designation: bool = False,
) -> LPModel:
    """Variables are clique-table entries; rows are normalisation, pairwise
    overlap agreement and pinned marginals.

    Each objective term (and pin) is read from one designated clique containing
    it: the lexicographically lowest, or the highest with ``reverse_designation``.
    """
    cliques = maximal_cliques(scenario)
    model = LPModel(scenario=scenario)
    model.cliques = cliques
    for c in cliques:
        model.offsets[c] = len(model.variables)
        for o in outcome_tuples(len(c)):
            model.variables.append((c, o))

    def entries_matching(c, sub, sub_outcome):
        pos = [c.index(u) for u in sub]
        base = model.offsets[c]
        return [
            base + k
            for k, o in enumerate(outcome_tuples(len(c)))
            if all(o[p] == s for p, s in zip(pos, sub_outcome))
        ]

    for c in cliques:
        model.add_row({model.offsets[c] + k: 1 for k in range(2 ** len(c))}, 1, f"norm{_label_set(scenario, c)}")
    for i, c1 in enumerate(cliques):
        for c2 in cliques[i + 1:]:
            inter = tuple(sorted(set(c1) & set(c2)))
            if not inter:
                continue
            for so in outcome_tuples(len(inter)):
                row = {j: Fraction(1) for j in entries_matching(c1, inter, so)}
                for j in entries_matching(c2, inter, so):
                    row[j] = row.get(j, 0) - 1
                model.add_row(
                    row,
                    0,
                    f"nd{_label_set(scenario, c1)}|{_label_set(scenario, c2)}@{_label_set(scenario, inter)}={_outcome_str(so)}",
                )

    def designated(subset):
        s = set(subset)
        holders = [c for c in cliques if s <= set(c)]
        if not holders:
            raise LPError(f"{_label_set(scenario, sorted(s))} is contained in no maximal clique")
        return holders[-1] if reverse_designation else holders[0]

    for pin in pins:
        table = pin[1] if isinstance(pin, tuple) else pin
        c = designated(table.support)
        for so in outcome_tuples(len(table.support)):
            model.add_row(
                {j: 1 for j in entries_matching(c, table.support, so)},
                table[so],
                f"pin{_label_set(scenario, table.support)}={_outcome_str(so)}",
            )

    if objective is not None:
        obj: dict = {}
        for t in objective.terms:
            c = designated((t.u, t.v))
            pu, pv = c.index(t.u), c.index(t.v)
            base = model.offsets[c]
            for k, o in enumerate(outcome_tuples(len(c))):
                obj[base + k] = obj.get(base + k, 0) + t.coeff * o[pu] * o[pv]
        model.objective = {j: v for j, v in obj.items() if v}
    return model


def behavior_from_solution(model: LPModel, sol: LPSolution) -> Behavior:
    tables = {}
    for c in model.cliques:
        base = model.offsets[c]
        tables[c] = ProbabilityTable(c, {o: sol.x[base + k] for k, o in enumerate(outcome_tuples(len(c)))})
    return Behavior(model.scenario, tables)


def infeasibility_hint(model: LPModel, protected: int) -> list[str]:
    """Deletion filter over the row groups after index ``protected``.

    Rows are grouped by name prefix (the part before ``=``); a group is dropped
    whenever the model stays infeasible without it. The survivors form an
    irreducible conflicting set.
    """
    groups: dict[str, list[int]] = {}
    for i in range(protected, len(model.rows)):
        groups.setdefault(model.row_names[i].split("=")[0], []).append(i)
    keep = list(groups)

    def feasible(names):
        rows = list(range(protected)) + [i for g in names for i in groups[g]]
        sub = LPModel(variables=model.variables, rows=[model.rows[i] for i in rows], rhs=[model.rhs[i] for i in rows])
        return solve(sub).status != INFEASIBLE

    if feasible(keep):
        return []
    for g in list(keep):
        trial = [x for x in keep if x != g]
        if not feasible(trial):
            keep = trial
    return keep


def nd_maximize(
    scenario: Scenario,
    expr: Expression,
    pins=(),
    lp_cap: int | None = None,
) -> tuple[Fraction, Behavior]:
    """Maximise ``expr`` over no-disturbance behaviors (optionally with pins)."""
    model = build_nd_lp(scenario, expr, pins)
    if lp_cap is not None and model.n_vars > lp_cap:
        raise LPCapError(f"LP has {model.n_vars} variables, above the cap of {lp_cap}")
    sol = solve(model)
    if sol.status == INFEASIBLE:
        base = len(model.rows) - sum(2 ** len(p[1].support if isinstance(p, tuple) else p.support) for p in pins)
        raise InfeasibleError("pinned marginals admit no no-disturbance extension", infeasibility_hint(model, base))
    if sol.status != OPTIMAL:
        raise LPError(f"LP status {sol.status}")
    return sol.value, behavior_from_solution(model, sol)
