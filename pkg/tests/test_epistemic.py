from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from rationalizer.epistemic import (
    SubjectiveModel,
    SubjectivePayoffStructure,
    TypeStructure,
    awareness_lint,
    common_knowledge,
    consistent_types,
    higher_order_richness,
    make_type,
    model_distance,
    type_consistency,
    validate_hierarchy,
    validate_model,
)
from rationalizer.forms import centipede_form
from rationalizer.payoffs import StandardPayoffStructure
from rationalizer.perturbations import (
    centipede_family,
    centipede_limit,
    centipede_models,
    centipede_types,
    default_rich_structure,
    richness_graft,
    two_state_structure,
    two_state_types,
)

CENT = centipede_form()


def perturbed_hierarchy(n):
    return centipede_models(n)[0].structure


def test_perturbed_hierarchy_is_coherent_on_own_utilities():
    d = perturbed_hierarchy(5)
    assert d.depth == 2
    assert validate_hierarchy(d, owner="1") == []
    # the full slice also carries player 1's row, which the perturbation changes
    assert validate_hierarchy(d, owner="1", literal=True)


def test_common_knowledge_is_coherent():
    assert validate_hierarchy(common_knowledge(two_state_structure())) == []


def test_changing_an_opponents_own_payoffs_breaks_coherence():
    bent = StandardPayoffStructure.single_state(
        CENT, {("D1",): (2, 5), ("A1", "d"): (0, 0), ("A1", "a", "D2"): (2, -1), ("A1", "a", "A2"): (1, 1)}
    )
    d = SubjectivePayoffStructure(centipede_limit(), {"2": common_knowledge(bent)})
    assert any("player 2" in v for v in validate_hierarchy(d, owner="1"))


def test_perturbed_types_are_unique():
    m1, m2 = centipede_models(7)
    ts = m1.types
    assert consistent_types(m1.structure, ts, "1") == {"t1"}
    assert consistent_types(m2.structure, ts, "2") == {"t2"}
    assert type_consistency(m2.structure, ts, "t2")
    assert validate_model(m1) == [] and validate_model(m2) == []


def test_type_with_foreign_payoff_type_is_inconsistent():
    ts = TypeStructure(("1", "2"), {
        "t1": make_type("1", "θ9", {("θ0", ("t2",)): 1}),
        "t2": make_type("2", "θ", {("θ0", ("t1",)): 1}),
    })
    d = common_knowledge(centipede_limit())
    assert not type_consistency(d, ts, "t1")
    # t2 only believes in t1, which is now inconsistent
    assert consistent_types(d, ts, "2") == frozenset()


def test_second_order_violation_is_detected():
    ts = TypeStructure(("1", "2"), {
        "t1": make_type("1", "θ", {("θ0", ("t2",)): 1}),
        "t2": make_type("2", "θ", {("θX", ("t1",)): 1}),
    })
    d = common_knowledge(centipede_limit())
    assert not type_consistency(d, ts, "t1")


def test_all_labels_consistent_under_common_knowledge():
    d = common_knowledge(two_state_structure())
    ts = two_state_types()
    assert consistent_types(d, ts, "1") == {"t1", "t1a"}
    assert consistent_types(d, ts, "2") == {"t2", "t2b", "t2mix"}


def test_dangling_label_raises():
    with pytest.raises(KeyError):
        type_consistency(common_knowledge(centipede_limit()), centipede_types(), "nope")


def test_awareness_lint_flags_unseen_states():
    other = StandardPayoffStructure.build(CENT, ("θ0", "θ9"), {"1": ("θ",), "2": ("θ",)}, lambda p, z, s: 0)
    d = SubjectivePayoffStructure(centipede_limit(), {"2": common_knowledge(other)})
    assert awareness_lint(d) and not awareness_lint(common_knowledge(other))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_graft_richness_order(k):
    d = richness_graft(centipede_limit(), None, k, "1")
    assert d.depth == k + 1
    # orders 1..k carry the non-rich base, so richness first holds at order k + 1
    assert higher_order_richness(d, "1") == k + 1


def test_richness_order_edge_cases():
    assert higher_order_richness(common_knowledge(default_rich_structure(CENT))) == 1
    assert richness_graft(centipede_limit(), None, 0, "1") == common_knowledge(default_rich_structure(CENT))
    limit = centipede_limit()
    deep = SubjectivePayoffStructure(limit, {"2": SubjectivePayoffStructure(limit, {"1": common_knowledge(limit)})})
    assert higher_order_richness(deep, "1") is None
    with pytest.raises(ValueError):
        richness_graft(limit, limit, 2, "1")
    with pytest.raises(ValueError):
        richness_graft(limit, None, -1, "1")


def test_distance_of_identical_profiles_is_zero():
    assert model_distance(centipede_models(3), centipede_models(3)) == 0


def test_distance_to_limit_shrinks():
    limit = centipede_models(None)
    ds = [model_distance(centipede_models(n), limit) for n in (1, 2, 4, 8)]
    assert all(a > b for a, b in zip(ds, ds[1:]))
    assert ds == [F(1, n) for n in (1, 2, 4, 8)]


@pytest.mark.parametrize("n", [1, 3, 10])
def test_level_one_swap_costs_half_the_gap(n):
    ts = centipede_types()
    plus = common_knowledge(centipede_family(n, "plus"))
    swapped = SubjectivePayoffStructure(centipede_family(n, "minus"), {"2": plus})
    a = SubjectiveModel("1", plus, ts, "t1")
    b = SubjectiveModel("1", swapped, ts, "t1")
    assert model_distance(a, b) == F(1, 2) * F(2, n)


def test_graft_distance_to_base_vanishes():
    base = centipede_limit()
    ts = centipede_types()
    ck = SubjectiveModel("1", common_knowledge(base), ts, "t1")
    ds = [model_distance(SubjectiveModel("1", richness_graft(base, None, k, "1"), ts, "t1"), ck) for k in (1, 2, 3, 4)]
    assert all(a > b for a, b in zip(ds, ds[1:]))


def _mixed_profile(p):
    ts = two_state_types()
    ts = TypeStructure(("1", "2"), {**ts.types, "tx": make_type("2", "θ", {("θ0", ("t1a",)): 1 - p, ("θ0", ("t1",)): p})})
    d = common_knowledge(two_state_structure())
    return SubjectiveModel("2", d, ts, "tx")


probs = st.fractions(min_value=0, max_value=1, max_denominator=12)


@settings(max_examples=30, deadline=None)
@given(probs, probs, probs)
def test_model_distance_is_a_pseudometric(p, q, r):
    a, b, c = _mixed_profile(p), _mixed_profile(q), _mixed_profile(r)
    assert model_distance(a, a) == 0
    assert model_distance(a, b) == model_distance(b, a) >= 0
    assert model_distance(a, c) <= model_distance(a, b) + model_distance(b, c)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 50))
def test_consistency_survives_an_enlarged_state_set(n):
    base = two_state_structure()
    bigger = StandardPayoffStructure.build(
        CENT, ("θ0", "ω"), {"1": ("θ1", "θ2", "θ3"), "2": ("θ",)},
        lambda p, z, st: base.utility(p, z, ("θ0", (st[1][0] if st[1][0] != "θ3" else "θ1", "θ"))) + (F(1, n) if st[0] == "ω" else 0),
    )
    ts = two_state_types()
    for p in ("1", "2"):
        assert consistent_types(common_knowledge(base), ts, p) <= consistent_types(common_knowledge(bigger), ts, p)
