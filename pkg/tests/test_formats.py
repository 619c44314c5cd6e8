import json
from fractions import Fraction

import pytest

from ndmonogamy.behavior import BehaviorError, pr_box
from ndmonogamy.bounds import bounds_report, chsh_chain_expression, cycle_expression
from ndmonogamy.formats import (
    behavior_to_dict,
    bounds_to_dict,
    load_scenario,
    load_tables,
    rational_field,
    read_json,
    render_text,
    report_to_dict,
    scenario_to_dict,
)
from ndmonogamy.monogamy import build_one_to_many, certify
from ndmonogamy.scenario import ScenarioError


def test_scenario_roundtrip():
    e = cycle_expression(5)
    data = json.loads(json.dumps(scenario_to_dict(e.scenario, [e])))
    sc, exprs = load_scenario(data)
    assert sc == e.scenario
    assert exprs[0].terms == e.terms


def test_behavior_roundtrip_keeps_exact_entries():
    b = pr_box()
    data = behavior_to_dict(b, [chsh_chain_expression(2)])
    assert data["tables"]["A1,B2"] == {"-+": "1/2", "+-": "1/2"}
    sc, _, tables = load_tables(json.loads(json.dumps(data)))
    assert tables == b.tables


def test_outcome_strings_follow_key_order():
    data = {
        "measurements": ["A", "B"],
        "compat": [["A", "B"]],
        "tables": {"B,A": {"+-": "1"}},
    }
    _, _, tables = load_tables(data)
    assert tables[(0, 1)][(-1, 1)] == 1


@pytest.mark.parametrize(
    "data, err",
    [
        ({"measurements": ["A,B"], "compat": []}, ScenarioError),
        ({"measurements": ["A", "B"], "compat": [], "expressions": [{"name": "x"}]}, ScenarioError),
        ({"measurements": ["A", "B"], "compat": [["A", "B"]], "tables": {"A,B": {"++": 0.5, "--": 0.5}}}, ScenarioError),
        ({"measurements": ["A", "B"], "compat": [["A", "B"]], "tables": {"A,B": {"+": "1"}}}, BehaviorError),
        ({"measurements": ["A", "B"], "compat": [["A", "B"]]}, BehaviorError),
    ],
)
def test_malformed_files(data, err):
    with pytest.raises(err):
        sc, _ = load_scenario(data)
        load_tables(data)


def test_read_json_errors(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        read_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        read_json(bad)


def test_report_serialisation():
    assert rational_field(Fraction(-7, 3)) == {"exact": "-7/3", "decimal": "-2.333333333"}
    d = bounds_to_dict(cycle_expression(4), bounds_report(cycle_expression(4)))
    assert d["classical"]["exact"] == "2" and d["quantum"] == "2.828427125"
    r = report_to_dict(certify(build_one_to_many([2, 2])))
    assert r["verdict"] == "monogamous" and r["lp_optimum"]["exact"] == "4"
    text = render_text(r)
    assert "classical_sum: 4 (4.000000000)" in text
