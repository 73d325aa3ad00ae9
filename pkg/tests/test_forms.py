import pytest
from hypothesis import given, strategies as st

from rationalizer.forms import (
    ROOT,
    ExtensiveForm,
    centipede_form,
    fmt_node,
    parse_node,
    validate_extensive_form,
)

CENT = centipede_form()


def labels(strategies):
    return {s.label for s in strategies}


def strat(player, label):
    return CENT.strategy(player, label)


def test_centipede_is_valid():
    assert validate_extensive_form(CENT) == []


def test_single_action_is_rejected():
    form = ExtensiveForm(("1", "2"), {(): {"1": ("X",)}})
    assert any("fewer than two actions" in v for v in validate_extensive_form(form))


def test_consecutive_sole_activity_is_rejected():
    form = ExtensiveForm(("1", "2"), {(): {"1": ("L", "R")}, ("L",): {"1": ("x", "y")}})
    assert any("twice in a row" in v for v in validate_extensive_form(form))


def test_strategy_sets():
    assert labels(CENT.strategies("1")) == {"D1D2", "D1A2", "A1D2", "A1A2"}
    assert labels(CENT.strategies("2")) == {"d", "a"}


def test_player_without_nodes_has_the_empty_strategy():
    form = ExtensiveForm(("1", "2", "3"), {(): {"1": ("L", "R")}, ("L",): {"2": ("l", "r")}})
    assert len(form.strategies("3")) == 1
    assert form.strategies("3")[0].choices == ()


@pytest.mark.parametrize(
    "s1,s2,start,expected",
    [
        ("A1D2", "a", ROOT, ("A1", "a", "D2")),
        ("D1A2", "a", ROOT, ("D1",)),
        ("D1A2", "a", ("A1", "a"), ("A1", "a", "A2")),
        ("A1A2", "d", ROOT, ("A1", "d")),
    ],
)
def test_outcome(s1, s2, start, expected):
    assert CENT.outcome([strat("1", s1), strat("2", s2)], start) == expected


def test_reaching_strategies():
    assert labels(CENT.reaching_strategies(("A1",), "1")) == {"A1D2", "A1A2"}
    assert labels(CENT.reaching_strategies(("A1",), "2")) == {"d", "a"}
    for p in CENT.players:
        assert CENT.reaching_strategies(ROOT, p) == frozenset(CENT.strategies(p))


def test_own_reachable_histories():
    assert CENT.own_reachable_histories(strat("1", "D1D2")) == {ROOT}
    assert CENT.own_reachable_histories(strat("1", "A1A2")) == {ROOT, ("A1", "a")}
    assert CENT.own_reachable_histories(strat("2", "a")) == {("A1",)}


def test_equivalence_classes():
    assert labels(CENT.outcome_class(strat("1", "D1D2"))) == {"D1D2", "D1A2"}
    assert labels(CENT.outcome_class(strat("1", "A1D2"))) == {"A1D2"}
    assert labels(CENT.continuation_class(strat("1", "A1D2"), ("A1",))) == {"A1D2", "D1D2"}


def test_terminals_are_depth_first():
    assert CENT.terminals == (("D1",), ("A1", "d"), ("A1", "a", "D2"), ("A1", "a", "A2"))


def test_simultaneous_moves_round_trip_through_text():
    form = ExtensiveForm(("1", "2"), {(): {"1": ("U", "D"), "2": ("L", "R")}})
    z = form.outcome([form.strategy("1", "U"), form.strategy("2", "R")])
    assert fmt_node(z) == "[U|R]"
    assert parse_node(fmt_node(z)) == z


@given(st.sampled_from(CENT.nodes))
def test_node_text_round_trip(h):
    assert parse_node(fmt_node(h)) == h


@given(st.sampled_from(CENT.strategies("1")), st.sampled_from(CENT.strategies("2")))
def test_outcome_class_members_share_the_outcome(s1, s2):
    z = CENT.outcome([s1, s2])
    for t in CENT.outcome_class(s1):
        assert CENT.outcome([t, s2]) == z


@pytest.mark.parametrize("mover", ["chance", "Nature"])
def test_chance_players_are_rejected(mover):
    form = ExtensiveForm(("1", mover), {(): {mover: ("L", "R")}, ("L",): {"1": ("x", "y")}})
    assert any("chance moves are not supported" in v for v in validate_extensive_form(form))


def test_undeclared_movers_are_reported():
    form = ExtensiveForm(("1",), {(): {"1": ("a", "b"), "2": ("l", "r")}})
    assert any("not a declared player" in v for v in validate_extensive_form(form))
