from fractions import Fraction as F

import pytest

from rationalizer.epistemic import consistent_types, model_distance, validate_hierarchy, validate_model
from rationalizer.forms import centipede_form, validate_extensive_form
from rationalizer.payoffs import is_rich, structure_distance
from rationalizer.perturbations import (
    A1AA2,
    D1,
    centipede_family,
    centipede_limit,
    centipede_models,
    coordination_form,
    default_rich_structure,
    enrich,
    graft_depth,
    graft_models,
    pad,
    select_outcome,
    selection_targets,
    tie_break,
    tie_break_models,
    two_state_example,
    two_state_structure,
)
from rationalizer.solvers import efr

CENT = centipede_form()


def row(ups, player, state=None):
    state = state or ups.states()[0]
    return tuple(ups.utility(player, z, state) for z in ups.form.terminals)


@pytest.mark.parametrize("n", [1, 2, 10])
def test_centipede_figures(n):
    assert row(centipede_family(n, "plus"), "1") == (2 + F(1, n), 0, 2, 1)
    assert row(centipede_family(n, "minus"), "1") == (2 - F(1, n), 0, 2, 1)
    assert row(centipede_family(n, "plus"), "2") == (0, 0, -1, 1)
    assert centipede_family(None) == centipede_limit()
    with pytest.raises(ValueError):
        centipede_family(0)


def test_perturbed_models_are_valid():
    for m in centipede_models(4):
        assert validate_model(m) == []
        assert validate_hierarchy(m.structure, m.player) == []
        assert consistent_types(m.structure, m.types, m.player) == {m.root}


def test_two_state_figures():
    ups = two_state_structure()
    st1, st2 = ("θ0", ("θ1", "θ")), ("θ0", ("θ2", "θ"))
    table = lambda st: [tuple(ups.utility(p, z, st) for p in ("1", "2")) for z in CENT.terminals]
    assert table(st1) == [(4, 4), (3, 3), (0, 0), (2, 2)]
    assert table(st2) == [(0, 0), (3, 0), (1, 1), (2, 2)]
    for m in two_state_example() + two_state_example(t2="t2mix"):
        assert validate_model(m) == []


def test_generated_structures_validate():
    for ups in (tie_break(centipede_limit(), 3), enrich(two_state_structure(), anchor="θ0*"),
                default_rich_structure(coordination_form()), pad(centipede_limit(), {"θc": "θ"})):
        assert ups.validate() == []
    assert validate_extensive_form(coordination_form()) == []


def test_enrich_is_rich_and_keeps_the_base():
    base = two_state_structure()
    rich = enrich(base, anchor="θ0*")
    assert is_rich(rich)[0]
    assert rich.nature == ("θ0", "θ0*")
    assert rich.origin["θ0*"] == "θ0"
    for st in base.states():
        assert rich.matrix(st) == base.matrix(st)


def test_pad_copies_are_payoff_identical():
    padded = pad(centipede_limit(), {"θc": "θ"})
    assert padded.matrix(("θ0", ("θc", "θ"))) == padded.matrix(("θ0", ("θ", "θ")))
    assert structure_distance(padded, centipede_limit()) == 0


@pytest.mark.parametrize("n", [1, 3, 10])
def test_tie_break_distance_law(n):
    for base in (centipede_limit(), two_state_structure()):
        assert structure_distance(tie_break(base, n), base) == F(1, n)


def test_graft_distances_shrink():
    models = two_state_example()
    rich = enrich(models[0].structure.level1)
    ds = [model_distance(graft_models(models, rich, k), models) for k in (1, 2, 3, 4)]
    assert all(a > b for a, b in zip(ds, ds[1:]))
    tb = [model_distance(tie_break_models(models, n), models) for n in (1, 2, 4)]
    assert all(a > b for a, b in zip(tb, tb[1:]))


def test_graft_depth():
    assert [graft_depth(n) for n in (1, 2, 3, 4, 10)] == [1, 2, 2, 3, 4]


def test_selection_targets():
    targets = selection_targets(centipede_models(None), D1)
    assert targets["1"].label.startswith("D1")
    with pytest.raises(ValueError):
        selection_targets(centipede_models(None), A1AA2)


@pytest.mark.parametrize("n", [1, 4])
def test_selection_pins_the_two_state_outcome(n):
    models = two_state_example()
    sel = select_outcome(models, selection_targets(models, A1AA2), n)
    assert sel.missing == []
    assert sel.depth >= graft_depth(n)
    assert efr(sel.models).outcomes() == {A1AA2}
    for m in sel.models:
        assert validate_model(m) == []
