"""JSON file formats for scenarios, behaviors, pins and reports.

Scenario file::

    {
      "measurements": ["A1", "A2", "B1", "B2"],
      "compat": [["A1", "B1"], ["A1", "B2"], ["A2", "B1"], ["A2", "B2"]],
      "expressions": [
        {"name": "CHSH", "terms": [{"u": "A1", "v": "B1", "c": "1"}, ...]}
      ],
      "shared": ["A1", "A2"]          # optional, monogamy instances only
    }

Behavior file: the scenario keys plus ``"tables"``, a mapping from a
comma-joined clique label list (in scenario order) to ``{outcome: rational}``
where the outcome string lists ``+``/``-`` in the same order, e.g.
``{"A1,B1": {"++": "1/2", "--": "1/2"}}``. Missing outcomes are 0.
A pins file is identical with ``"pins"`` in place of ``"tables"``; its keys
may name any jointly compatible subset.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .behavior import Behavior, BehaviorError, ProbabilityTable, outcome_string, table_from_labels
from .bounds import BoundsReport
from .scenario import Expression, Scenario, ScenarioError, format_fraction, validate_scenario


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    return data


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def _check_labels(scenario: Scenario):
    for lab in scenario.labels:
        if "," in lab or any(ch.isspace() for ch in lab):
            raise ScenarioError(f"label {lab!r} may not contain commas or whitespace")


def parse_expressions(scenario: Scenario, raw) -> list[Expression]:
    if raw is None:
        return []
    if not isinstance(raw, list):
        raise ScenarioError("'expressions' must be a list")
    out = []
    names = set()
    for k, e in enumerate(raw):
        if not isinstance(e, dict) or "terms" not in e:
            raise ScenarioError(f"expression #{k} needs 'name' and 'terms'")
        name = str(e.get("name", f"expr{k}"))
        if name in names:
            raise ScenarioError(f"duplicate expression name {name!r}")
        names.add(name)
        terms = []
        for t in e["terms"]:
            if not isinstance(t, dict) or not {"u", "v"} <= set(t):
                raise ScenarioError(f"expression {name!r}: each term needs 'u', 'v' and 'c'")
            terms.append((t["u"], t["v"], t.get("c", "1")))
        out.append(Expression.from_labels(name, scenario, terms))
    return out


def load_scenario(data: Mapping) -> tuple[Scenario, list[Expression]]:
    sc = validate_scenario(data)
    _check_labels(sc)
    return sc, parse_expressions(sc, data.get("expressions"))


def scenario_to_dict(scenario: Scenario, expressions: Sequence[Expression] = (), shared=None) -> dict:
    out = scenario.to_dict()
    if expressions:
        out["expressions"] = [e.to_dict() for e in expressions]
    if shared:
        out["shared"] = [scenario.labels[u] for u in shared]
    return out


def _parse_tables(scenario: Scenario, raw, key: str) -> dict[tuple[int, ...], ProbabilityTable]:
    if not isinstance(raw, dict):
        raise BehaviorError(f"'{key}' must map clique label lists to outcome tables")
    out = {}
    for clique_key, entries in raw.items():
        labels = [x.strip() for x in clique_key.split(",") if x.strip()]
        if not isinstance(entries, dict):
            raise BehaviorError(f"table {clique_key!r} must be an object")
        t = table_from_labels(scenario, labels, entries)
        if t.support in out:
            raise BehaviorError(f"duplicate table for {clique_key!r}")
        out[t.support] = t
    return out


def load_tables(data: Mapping, key: str = "tables"):
    sc, exprs = load_scenario(data)
    if key not in data:
        raise BehaviorError(f"missing '{key}'")
    return sc, exprs, _parse_tables(sc, data[key], key)


def table_to_dict(scenario: Scenario, table: ProbabilityTable) -> tuple[str, dict]:
    key = ",".join(scenario.labels[u] for u in table.support)
    return key, {outcome_string(o): format_fraction(p) for o, p in table.entries.items() if p}


def behavior_to_dict(behavior: Behavior, expressions: Sequence[Expression] = ()) -> dict:
    out = scenario_to_dict(behavior.scenario, expressions)
    out["tables"] = dict(table_to_dict(behavior.scenario, t) for t in behavior.tables.values())
    return out


def decimal(value: Fraction, digits: int = 9) -> str:
    return f"{float(value):.{digits}f}"


def rational_field(value: Fraction | None) -> dict | None:
    if value is None:
        return None
    return {"exact": format_fraction(value), "decimal": decimal(value)}


def bounds_to_dict(expr: Expression, report: BoundsReport) -> dict:
    return {
        "expression": expr.name,
        "terms": expr.render(),
        "classical": rational_field(report.classical),
        "quantum": None if report.quantum is None else f"{report.quantum:.9f}",
        "no_disturbance": rational_field(report.no_disturbance),
        "no_disturbance_source": report.nd_source or None,
        "argmax_assignments": [
            "".join("+" if a == 1 else "-" for a in asg.values) for asg in report.argmax_assignments
        ],
        "argmax_order": [expr.scenario.labels[u] for u in expr.measurements],
    }


def report_to_dict(report) -> dict:
    inst = report.instance
    sc = inst.scenario
    rec = report.recombination
    out = {
        "kind": inst.kind,
        "expressions": [{"name": e.name, "terms": e.render(), "classical": format_fraction(b)}
                        for e, b in zip(inst.expressions, report.classical_bounds)],
        "shared": [sc.labels[u] for u in inst.shared],
        "classical_sum": rational_field(report.classical_sum),
        "recombination_scheme": rec.scheme if rec else None,
        "recombined": [],
        "recombined_classical_sum": rational_field(report.recombined_classical_sum),
        "lp_variables": report.lp_variables,
        "lp_optimum": rational_field(report.lp_optimum),
        "verdict": report.verdict,
        "notes": list(report.notes),
    }
    if rec:
        for e, b, w in zip(rec.expressions, report.recombined_bounds, rec.witnesses):
            out["recombined"].append({
                "name": e.name,
                "terms": e.render(),
                "classical": format_fraction(b),
                "chordal_fill": [[sc.labels[a], sc.labels[b_]] for a, b_ in w.fill],
                "peo": [sc.labels[u] for u in w.peo],
            })
    return out


def render_text(data, indent: int = 0) -> str:
    """Plain ``key: value`` rendering of a report dict (nested by indentation)."""
    pad = "  " * indent
    lines = []
    if isinstance(data, dict):
        for k, v in data.items():
            if isinstance(v, dict) and set(v) == {"exact", "decimal"}:
                lines.append(f"{pad}{k}: {v['exact']} ({v['decimal']})")
            elif isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(data, list):
        for item in data:
            if isinstance(item, (dict, list)):
                body = render_text(item, indent + 1).lstrip()
                lines.append(f"{pad}- {body}")
            else:
                lines.append(f"{pad}- {_scalar(item)}")
    else:
        lines.append(pad + _scalar(data))
    return "\n".join(lines)


def _scalar(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, list) and not v:
        return "[]"
    if isinstance(v, dict) and not v:
        return "{}"
    return str(v)
