import copy
import json
from pathlib import Path

import jsonschema
import pytest
from hypothesis import given, settings, strategies as st

from mdp_defense import (
    ScenarioError,
    ScenarioSyntaxError,
    attack_penalty,
    defense_cost,
    emit_scenario,
    parse_scenario,
    validate_scenario,
)
from mdp_defense.scenario import DefenseSpec, RewardParams, scenario_to_document

from conftest import PAPER8, TINY1

SCHEMA = json.loads((Path(__file__).resolve().parent.parent / "docs" / "scenario.schema.json").read_text())


def _doc(path=PAPER8):
    return json.loads(Path(path).read_text())


def test_fixture_counts(paper8):
    assert len(paper8.hosts) == 8
    assert len(paper8.vulnerabilities()) == 8
    assert [d.id for d in paper8.defenses] == ["D1", "D2", "D3", "D4", "D5", "D6"]
    assert paper8.attack_path[0] == "internet"
    assert len(paper8.links) == 13


@pytest.mark.parametrize("path", [PAPER8, TINY1])
def test_fixtures_match_schema(path):
    jsonschema.validate(_doc(path), SCHEMA)


def test_empty_hosts_rejected():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario({"hosts": [], "links": []})
    assert "scenario must declare ≥1 host" in exc.value.violations


def test_unknown_vuln_reference():
    doc = _doc()
    doc["defenses"][1]["vuln"] = "V9"
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(doc)
    assert any("unknown reference 'V9'" in v for v in exc.value.violations)


def test_cvss_out_of_range_and_missing_path_edge_both_reported():
    doc = _doc()
    doc["hosts"][0]["vulnerabilities"][0]["cvss"] = 11
    doc["attack_path"] = ["internet", "172.16.0.2", "172.16.0.8"]
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(doc)
    text = " | ".join(exc.value.violations)
    assert "cvss out of [0,10]" in text
    assert "path edge missing: 172.16.0.2->172.16.0.8" in text


def test_syntax_error_has_position():
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario('{"hosts": [\n  {"id": }]}')
    assert exc.value.line == 2


def test_defense_costs(paper8):
    assert defense_cost(paper8, paper8.defense("D2")) == 6.0
    # block cost falls back to the highest CVSS on the protected host
    assert defense_cost(paper8, paper8.defense("D3")) == 2.1
    assert defense_cost(paper8, paper8.defense("D4")) == 8.8
    explicit = DefenseSpec("X", "block", "172.16.0.1", source="internet", cost=1.5)
    assert defense_cost(paper8, explicit) == 1.5


def test_attack_penalty(paper8):
    v3 = paper8.host("172.16.0.3").vulnerability("V3")
    v2 = paper8.host("172.16.0.2").vulnerability("V2")
    assert attack_penalty(paper8, v3) == 10.0
    assert attack_penalty(paper8, v2) == 2.1
    halved = type(paper8)(paper8.hosts, paper8.links, paper8.defenses, paper8.attack_path,
                          RewardParams(attack_weight=0.5))
    assert attack_penalty(halved, paper8.host("172.16.0.5").vulnerability("V5")) == 3.75


def test_explicit_cost_on_patch_rejected():
    doc = _doc()
    doc["defenses"][1]["cost"] = 1.0
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


@pytest.mark.parametrize("path", [PAPER8, TINY1])
def test_round_trip(path):
    s = parse_scenario(Path(path).read_text())
    again = parse_scenario(emit_scenario(s))
    assert again == s
    jsonschema.validate(scenario_to_document(s), SCHEMA)


def test_parse_does_not_mutate_input():
    doc = _doc()
    before = copy.deepcopy(doc)
    parse_scenario(doc)
    assert doc == before


_MUTATIONS = [
    ("cvss", lambda d, x: d["hosts"][x % 8]["vulnerabilities"][0].__setitem__("cvss", 10.5 + x)),
    ("patch_cost", lambda d, x: d["hosts"][x % 8]["vulnerabilities"][0].__setitem__("patch_cost", -1 - x)),
    ("link", lambda d, x: d["links"].append(["internet", f"ghost{x}"])),
    ("defense", lambda d, x: d["defenses"].append({"id": "D1", "kind": "patch", "target": "172.16.0.1", "vuln": "V1"})),
    ("gamma", lambda d, x: d["learning"].__setitem__("gamma", 1.0 + x)),
    ("rate", lambda d, x: d.setdefault("rewards", {}).__setitem__("attack_success_rate", 1.5 + x)),
    ("path", lambda d, x: d["attack_path"].__setitem__(0, "172.16.0.1")),
]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(_MUTATIONS), st.integers(0, 20))
def test_single_mutations_are_reported(mutation, x):
    _, mutate = mutation
    doc = _doc()
    mutate(doc, x)
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(doc)
    assert exc.value.violations


def test_validate_scenario_clean_on_fixtures(paper8, tiny1):
    assert validate_scenario(paper8) == []
    assert validate_scenario(tiny1) == []
