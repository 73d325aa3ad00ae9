import json
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from rationalizer.cli import main, shipped_scenarios
from rationalizer.scenario import (
    E_DECIMAL,
    E_REFERENCE,
    E_SYNTAX,
    E_VALIDATION,
    ScenarioError,
    parse_scenario,
    run_scenario,
    serialize_scenario,
)

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "scenario.schema.json").read_text(encoding="utf-8"))


def shipped(name):
    return resources.files("rationalizer.scenarios").joinpath(name).read_text(encoding="utf-8")


def with_commands(text, commands):
    doc = json.loads(text)
    doc["commands"] = commands
    return json.dumps(doc, ensure_ascii=False, indent=1)


@pytest.mark.parametrize("name", ["centipede_limit.scn", "centipede_perturbed.scn", "two_state.scn"])
def test_shipped_scenarios_match_the_schema_and_round_trip(name):
    text = shipped(name)
    jsonschema.validate(json.loads(text), SCHEMA)
    sc = parse_scenario(text)
    again = serialize_scenario(sc)
    jsonschema.validate(json.loads(again), SCHEMA)
    assert parse_scenario(again) == sc


def test_limit_scenario_has_one_compare():
    sc = parse_scenario(shipped("centipede_limit.scn"))
    assert sc.commands == [{"op": "compare", "model": "limit", "concepts": ["efr", "br"]}]


def test_decimal_payoff_is_rejected_with_its_position():
    text = shipped("centipede_limit.scn").replace('"D1": [2, 0]', '"D1": ["0.5", 0]')
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    assert err.value.code == E_DECIMAL
    assert "decimals forbidden; use p/q" in str(err.value)
    line = next(k for k, l in enumerate(text.splitlines(), 1) if '"0.5"' in l)
    assert err.value.line == line
    bare = shipped("centipede_limit.scn").replace('"D1": [2, 0]', '"D1": [0.5, 0]')
    with pytest.raises(ScenarioError) as err:
        parse_scenario(bare)
    assert err.value.code == E_DECIMAL


def test_unknown_model_is_a_reference_error():
    text = with_commands(shipped("centipede_limit.scn"), [{"op": "solve", "model": "ghost"}])
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    assert err.value.code == E_REFERENCE


def test_syntax_and_validation_errors_have_distinct_codes():
    with pytest.raises(ScenarioError) as err:
        parse_scenario("{ not json")
    assert err.value.code == E_SYNTAX
    text = shipped("two_state.scn").replace('"root": "t2mix"', '"root": "t1"')
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    assert err.value.code == E_VALIDATION


def test_empty_command_list():
    report = run_scenario(parse_scenario(with_commands(shipped("centipede_limit.scn"), [])))
    assert report.exit_code == 0
    assert report.text() == "# machine section (CSV)\nconcept,round,player,type,strategies,outcomes\n"


def test_perturbed_report():
    text = run_scenario(parse_scenario(shipped("centipede_perturbed.scn"))).text()
    assert "efr outcomes: {(A1,a,D2), (A1,d), D1}" in text
    assert "br outcomes: {D1}" in text
    assert "model_distance = 1/10" in text


def test_two_state_report_rows():
    report = run_scenario(parse_scenario(shipped("two_state.scn")))
    csv = report.text().split("# machine section (CSV)\n")[1].splitlines()
    finals = [r for r in csv if r.startswith("br,") and ",2,t2" in r]
    assert any(r.split(",")[4] == "a" for r in finals)
    assert any(r.split(",")[4] == "a d" for r in finals)


def test_budget_failure_is_isolated():
    sc = parse_scenario(shipped("centipede_perturbed.scn"))
    report = run_scenario(sc, max_rounds=1)
    assert report.exit_code == 3
    assert "FAILED" in report.text()
    assert "model_distance = 1/10" in report.text()


def test_cli_solve_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "report.txt"
    assert main(["solve", "--scenario", "builtin:centipede_limit.scn", "--out", str(out)]) == 0
    assert "efr outcomes: {D1}" in out.read_text(encoding="utf-8")
    bad = tmp_path / "bad.scn"
    bad.write_text(shipped("centipede_limit.scn").replace('[2, 0]', '["1.5", 0]'), encoding="utf-8")
    assert main(["solve", "--scenario", str(bad)]) == 2
    assert "decimals forbidden" in capsys.readouterr().err
    assert main(["solve", "--scenario", "builtin:centipede_perturbed.scn", "--max-rounds", "1"]) == 3


def test_cli_subcommands(capsys):
    assert main(["list"]) == 0
    assert capsys.readouterr().out.split() == shipped_scenarios()
    assert main(["check", "--scenario", "builtin:centipede_perturbed.scn", "--richness"]) == 0
    assert "not rich" in capsys.readouterr().out
    assert main(["distance", "--scenario", "builtin:centipede_perturbed.scn", "perturbed", "limit"]) == 0
    assert "model_distance = 1/10" in capsys.readouterr().out
    assert main(["distance", "--scenario", "builtin:centipede_perturbed.scn", "perturbed", "ghost"]) == 2
    assert main(["perturb", "--scenario", "builtin:two_state.scn", "--model", "cb_theta1",
                 "--kind", "tie_break", "--param", "n=2", "--concept", "br"]) == 0
    assert "tie_break n=2" in capsys.readouterr().out
    assert main(["perturb", "--scenario", "builtin:two_state.scn", "--model", "cb_theta1",
                 "--kind", "graft", "--param", "k"]) == 2


def test_concept_override(capsys):
    assert main(["solve", "--scenario", "builtin:centipede_limit.scn", "--concept", "icr"]) == 0
    out = capsys.readouterr().out
    assert "[icr]" in out and "[efr]" not in out
