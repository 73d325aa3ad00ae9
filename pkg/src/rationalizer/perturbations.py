"""Generators: benchmark games, tie-break and richness perturbations, unique selection."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import floor, log2
from typing import Mapping, Sequence

from .epistemic import (
    SubjectiveModel,
    SubjectivePayoffStructure,
    TypeStructure,
    common_knowledge,
    make_type,
)
from .forms import ExtensiveForm, Node, Strategy, centipede_form
from .lp import OPTIMAL, LinearProgram
from .payoffs import StandardPayoffStructure, is_rich

F = Fraction

# -- benchmark structures -------------------------------------------------------

D1, A1D, A1AD2, A1AA2 = ("D1",), ("A1", "d"), ("A1", "a", "D2"), ("A1", "a", "A2")


def centipede_family(n: int | None, sign: str = "plus", form: ExtensiveForm | None = None) -> StandardPayoffStructure:
    """Single-state centipede payoffs; ``n=None`` gives the limit structure."""
    form = form or centipede_form()
    if n is None:
        d1 = F(2)
    else:
        if n < 1:
            raise ValueError("n must be at least 1")
        d1 = F(2) + (F(1, n) if sign == "plus" else -F(1, n))
    table = {D1: (d1, 0), A1D: (0, 0), A1AD2: (2, -1), A1AA2: (1, 1)}
    return StandardPayoffStructure.single_state(form, table)


def centipede_limit(form: ExtensiveForm | None = None) -> StandardPayoffStructure:
    return centipede_family(None, form=form)


def centipede_types() -> TypeStructure:
    return TypeStructure(
        ("1", "2"),
        {
            "t1": make_type("1", "θ", {("θ0", ("t2",)): 1}),
            "t2": make_type("2", "θ", {("θ0", ("t1",)): 1}),
        },
    )


def centipede_models(n: int | None) -> tuple[SubjectiveModel, SubjectiveModel]:
    """The perturbed pair (player 1 sees the minus structure, both ascribe the plus one); n=None is the limit."""
    ts = centipede_types()
    if n is None:
        d = common_knowledge(centipede_limit())
        return SubjectiveModel("1", d, ts, "t1"), SubjectiveModel("2", d, ts, "t2")
    plus = common_knowledge(centipede_family(n, "plus"))
    d1 = SubjectivePayoffStructure(centipede_family(n, "minus"), {"2": plus})
    return SubjectiveModel("1", d1, ts, "t1"), SubjectiveModel("2", plus, ts, "t2")


TWO_STATE_PAYOFFS = {
    "θ1": {D1: (4, 4), A1D: (3, 3), A1AD2: (0, 0), A1AA2: (2, 2)},
    "θ2": {D1: (0, 0), A1D: (3, 0), A1AD2: (1, 1), A1AA2: (2, 2)},
}


def two_state_structure(form: ExtensiveForm | None = None) -> StandardPayoffStructure:
    """Player 1 knows which of two states holds; player 2 has a single payoff type."""
    form = form or centipede_form()
    return StandardPayoffStructure.build(
        form,
        ("θ0",),
        {"1": ("θ1", "θ2"), "2": ("θ",)},
        lambda p, z, st: TWO_STATE_PAYOFFS[st[1][0]][z][form.players.index(p)],
    )


def two_state_types() -> TypeStructure:
    """t1: common belief in θ2 (payoff θ2); t2: common belief in θ1; t2mix: ½/½ over the states."""
    return TypeStructure(
        ("1", "2"),
        {
            "t1": make_type("1", "θ2", {("θ0", ("t2b",)): 1}),
            "t2b": make_type("2", "θ", {("θ0", ("t1",)): 1}),
            "t1a": make_type("1", "θ1", {("θ0", ("t2",)): 1}),
            "t2": make_type("2", "θ", {("θ0", ("t1a",)): 1}),
            "t2mix": make_type("2", "θ", {("θ0", ("t1a",)): F(1, 2), ("θ0", ("t1",)): F(1, 2)}),
        },
    )


def two_state_example(t2: str = "t2", t1: str = "t1") -> tuple[SubjectiveModel, SubjectiveModel]:
    d = common_knowledge(two_state_structure())
    ts = two_state_types()
    return SubjectiveModel("1", d, ts, t1), SubjectiveModel("2", d, ts, t2)


def coordination_form() -> ExtensiveForm:
    return ExtensiveForm(("1", "2"), {(): {"1": ("U", "D"), "2": ("L", "R")}})


def coordination_structure() -> StandardPayoffStructure:
    form = coordination_form()
    table = {(("U", "L"),): (2, 2), (("D", "R"),): (1, 1), (("U", "R"),): (0, 0), (("D", "L"),): (0, 0)}
    return StandardPayoffStructure.single_state(form, table)


def coordination_models() -> tuple[SubjectiveModel, SubjectiveModel]:
    d = common_knowledge(coordination_structure())
    ts = centipede_types()
    return SubjectiveModel("1", d, ts, "t1"), SubjectiveModel("2", d, ts, "t2")


# -- structure generators -------------------------------------------------------

def _replace(state, labels: Mapping[str, str], players) -> tuple:
    return (state[0], tuple(labels.get(t, t) for t in state[1]))


def tie_break_label(theta: str, s: Strategy, n: int) -> str:
    return f"{theta}^{n}[{s.label}]"


def tie_break(ups: StandardPayoffStructure, n: int) -> StandardPayoffStructure:
    """Add, per (player, strategy, payoff type), a copy of the type with a 1/n bonus on the strategy's terminals."""
    if n < 1:
        raise ValueError("n must be at least 1")
    form = ups.form
    bonus: dict[str, tuple[str, str, frozenset]] = {}
    types = {}
    for p in form.players:
        labels = list(ups.types[p])
        for s in form.strategies(p):
            for th in ups.types[p]:
                lab = tie_break_label(th, s, n)
                bonus[lab] = (p, th, form.terminals_consistent_with(s))
                labels.append(lab)
        types[p] = labels
    origin = {**ups.origin, **{lab: th for lab, (_, th, _) in bonus.items()}}
    back = {lab: th for lab, (_, th, _) in bonus.items()}

    def util(p, z, st):
        base = ups.utility(p, z, _replace(st, back, form.players))
        mine = st[1][form.players.index(p)]
        if mine in bonus and z in bonus[mine][2]:
            base += F(1, n)
        return base

    return StandardPayoffStructure.build(form, ups.nature, types, util, origin)


def _spread(ups: StandardPayoffStructure, p: str) -> Fraction:
    vals = [ups.utility(p, z, st) for st in ups.states() for z in ups.form.terminals]
    return max(vals) - min(vals)


def dominance_label(theta: str, s: Strategy) -> str:
    return f"δ[{s.label}]{theta}"


def enrich(ups: StandardPayoffStructure, anchor: str | None = None) -> StandardPayoffStructure:
    """Add a dominance copy of every payoff type for every strategy, making the structure rich.

    The copy for (s, θ) equals θ for opponents and adds a bonus larger than
    the payoff spread at s's terminals for its owner.  ``anchor`` names an
    extra nature state that copies the first one.
    """
    form = ups.form
    extra: dict[str, tuple[str, frozenset, Fraction]] = {}
    types = {}
    for p in form.players:
        labels = list(ups.types[p])
        big = _spread(ups, p) + 1
        for s in form.strategies(p):
            for th in ups.types[p]:
                lab = dominance_label(th, s)
                extra[lab] = (th, form.terminals_consistent_with(s), big)
                labels.append(lab)
        types[p] = labels
    back = {lab: th for lab, (th, _, _) in extra.items()}
    origin = {**ups.origin, **back}
    nature = tuple(ups.nature) + ((anchor,) if anchor else ())
    if anchor:
        origin[anchor] = ups.nature[0]

    def util(p, z, st):
        st = (ups.nature[0] if st[0] == anchor else st[0], st[1])
        base = ups.utility(p, z, _replace(st, back, form.players))
        mine = st[1][form.players.index(p)]
        if mine in extra and z in extra[mine][1]:
            base += extra[mine][2]
        return base

    return StandardPayoffStructure.build(form, nature, types, util, origin)


def pad(ups: StandardPayoffStructure, copies: Mapping[str, str]) -> StandardPayoffStructure:
    """Add payoff types that replicate existing ones exactly (label -> copied label)."""
    form = ups.form
    labels = {}
    for p in form.players:
        labels[p] = list(ups.types[p]) + [c for c, b in copies.items() if b in ups.types[p] and c not in ups.types[p]]
    origin = {**ups.origin, **{c: b for c, b in copies.items()}}
    return StandardPayoffStructure.build(
        form, ups.nature, labels, lambda p, z, st: ups.utility(p, z, _replace(st, copies, form.players)), origin
    )


def default_rich_structure(form: ExtensiveForm) -> StandardPayoffStructure:
    """One payoff type per strategy: utility 1 on the strategy's terminals, 0 elsewhere."""
    types = {p: [f"δ[{s.label}]" for s in form.strategies(p)] for p in form.players}
    consistent = {
        f"δ[{s.label}]": form.terminals_consistent_with(s) for p in form.players for s in form.strategies(p)
    }

    def util(p, z, st):
        return 1 if z in consistent[st[1][form.players.index(p)]] else 0

    return StandardPayoffStructure.build(form, ("θ*",), types, util)


def richness_graft(
    base: StandardPayoffStructure,
    rich: StandardPayoffStructure | None,
    k: int,
    player: str,
) -> SubjectivePayoffStructure:
    """Hierarchy with ``base`` at orders 1..k and common knowledge of ``rich`` below."""
    rich = rich if rich is not None else default_rich_structure(base.form)
    if k < 0:
        raise ValueError("k must be non-negative")
    if not is_rich(rich)[0]:
        raise ValueError("the bottom structure is not rich")
    players = base.form.players
    cache: dict = {}

    def build(level: int, owner: str) -> SubjectivePayoffStructure:
        if level == 0:
            return common_knowledge(rich)
        if (level, owner) not in cache:
            cache[(level, owner)] = SubjectivePayoffStructure(
                base, {j: build(level - 1, j) for j in players if j != owner}
            )
        return cache[(level, owner)]

    return build(k, player)


def graft_models(models: Sequence[SubjectiveModel], rich: StandardPayoffStructure, k: int) -> list[SubjectiveModel]:
    """Replace every player's structure by the depth-k graft of its level-1 structure."""
    return [
        SubjectiveModel(m.player, richness_graft(m.structure.level1, rich, k, m.player), m.types, m.root)
        for m in models
    ]


def tie_break_models(models: Sequence[SubjectiveModel], n: int) -> list[SubjectiveModel]:
    """Common knowledge of tie_break(level-1, n) with the original types kept."""
    out = []
    for m in models:
        d = common_knowledge(tie_break(m.structure.level1, n))
        out.append(SubjectiveModel(m.player, d, m.types, m.root))
    return out


# -- unique selection --------------------------------------------------------------

def graft_depth(n: int) -> int:
    return 1 + floor(log2(n))


@dataclass
class Selection:
    """Perturbed profile plus the construction record."""

    models: list
    depth: int
    type_levels: dict = field(default_factory=dict)  # level -> {type name: (player, original type, strategy)}
    missing: list = field(default_factory=list)


def _payoffs_against(P, p, own_label, label_of, atoms, s, h):
    form = P.form
    out = []
    for sp, t0, tp in atoms:
        prof = {q.player: q for q in sp}
        prof[p] = s
        labels = {j: label_of[t] for j, t in zip(form.opponents(p), tp)}
        labels[p] = own_label
        out.append(P.utility(p, form.outcome(prof, h), (t0, tuple(labels[q] for q in form.players))))
    return out


def _on_path_belief(P, p, own_label, s, prior, pool, label_of, plays):
    """Full-support belief over lower types under which s beats every rival strictly wherever reached.

    ``prior`` is over (θ0, opponent original-type profile); ``pool[j][t']``
    lists the lower-level types standing for original type t'.  Histories
    the belief does not reach get no rows here; the solver decides them.
    """
    form = P.form
    opp = form.opponents(p)
    atoms, groups = [], {}
    for (t0, orig), pr in prior.items():
        lists = [pool[j].get(o, []) for j, o in zip(opp, orig)]
        if any(not L for L in lists):
            return None
        for tp in product(*lists):
            groups.setdefault((t0, orig), []).append(len(atoms))
            atoms.append((tuple(plays[t] for t in tp), t0, tp))
    lp = LinearProgram()
    slack = lp.var("t")
    lp.le({slack: 1}, 1)
    for key, idx in groups.items():
        lp.eq({("p", k): 1 for k in idx}, prior[key])
        for k in idx:
            lp.ge({("p", k): 1, slack: -1}, 0)
    for h in sorted(form.own_reachable_histories(s), key=len):
        hit = [k for k, a in enumerate(atoms) if all(form.consistent_with_path(q, h) for q in a[0])]
        if not hit:
            continue
        sub = [atoms[k] for k in hit]
        mine = _payoffs_against(P, p, own_label, label_of, sub, s, h)
        for r in form.strategies(p):
            if r == s:
                continue
            theirs = _payoffs_against(P, p, own_label, label_of, sub, r, h)
            row = {("p", k): a - b for k, a, b in zip(hit, mine, theirs) if a != b}
            if r[h] != s[h]:
                if not row:
                    return None
                row[slack] = -1
            if row:
                lp.ge(row, 0)
    res = lp.maximize({slack: 1})
    if res.status != OPTIMAL or res.value <= 0:
        return None
    belief: dict = {}
    for k, (_, t0, tp) in enumerate(atoms):
        v = res.x.get(("p", k), F(0))
        if v:
            belief[(t0, tp)] = belief.get((t0, tp), F(0)) + v
    return belief


def select_outcome(
    models: Sequence[SubjectiveModel],
    targets: Mapping[str, Strategy],
    n: int,
    depth: int | None = None,
    extra_levels: int = 3,
    threads: int | None = None,
) -> Selection:
    """Perturb a standard model so that forward induction pins each root type to ``targets``.

    Orders 1..K of every hierarchy use tie_break(Θ, n), padded with copies
    of the seed labels; below sits common knowledge of a rich enrichment of
    Θ with an anchor state, K = 1 + floor(log2 n) unless ``depth`` is given.
    Types are built bottom-up.  Level 0 holds one seed per (original type,
    strategy) with a dominant strategy.  At level l each candidate is an
    (original type, bonus strategy, target strategy) triple whose belief over
    level l-1 keeps the original type's (state, opponent-type) marginal and
    makes the target strictly optimal on path; the forward-induction solver
    then keeps the candidates whose final set is the target's outcome class.
    If some root target is not available at level K the next levels are
    tried, up to ``extra_levels`` more.
    """
    from .solvers import efr  # solvers import this module's callers, not the reverse

    theta = models[0].structure.level1
    ts = models[0].types
    form = theta.form
    players = form.players
    K = depth if depth is not None else graft_depth(n)
    anchor = f"{theta.nature[0]}*"
    star = enrich(theta, anchor=anchor)
    P = pad(tie_break(theta, n), {lab: b for lab, b in star.origin.items() if lab.startswith("δ[")})
    originals = {p: ts.of_player(p) for p in players}

    structures: dict = {}

    def structure(level: int, owner: str) -> SubjectivePayoffStructure:
        if level == 0:
            return common_knowledge(star)
        if (level, owner) not in structures:
            structures[(level, owner)] = SubjectivePayoffStructure(
                P, {j: structure(level - 1, j) for j in players if j != owner}
            )
        return structures[(level, owner)]

    types: dict = {}
    plays: dict = {}
    label_of: dict = {}
    levels: dict = {0: {}}
    pool = {p: {} for p in players}
    for p in players:
        opp = tuple(j for j in players if j != p)
        partner = tuple(f"L0|{originals[j][0]}|{form.strategies(j)[0].label}" for j in opp)
        for t in originals[p]:
            for s in form.strategies(p):
                name = f"L0|{t}|{s.label}"
                lab = dominance_label(ts[t].payoff_type, s)
                types[name] = make_type(p, lab, {(anchor, partner): 1})
                plays[name], label_of[name] = s, lab
                pool[p].setdefault(t, []).append(name)
                levels[0][name] = (p, t, s)

    level = 0
    while True:
        level += 1
        cand: dict = {}
        for p in players:
            lower = {j: pool[j] for j in players if j != p}
            for t in originals[p]:
                prior = ts[t].belief_map()
                for b in form.strategies(p):
                    own = tie_break_label(ts[t].payoff_type, b, n)
                    for s in form.strategies(p):
                        belief = _on_path_belief(P, p, own, s, prior, lower, label_of, plays)
                        if belief is not None:
                            cand[f"L{level}|{t}|{b.label}|{s.label}"] = (p, t, s, make_type(p, own, belief))
        trial = TypeStructure(players, {**types, **{k: v[3] for k, v in cand.items()}})
        roots = []
        for p in players:
            mine = [k for k, v in cand.items() if v[0] == p]
            if not mine:
                break
            roots.append(SubjectiveModel(p, structure(level, p), trial, mine[0]))
        kept = {}
        if len(roots) == len(players):
            trace = efr(roots, threads=threads)
            for key in trace.roots:
                for t, got in trace.node_sets(len(trace.rounds) - 1, key).items():
                    if t in cand and got == form.outcome_class(cand[t][2]):
                        kept[t] = cand[t]
        levels[level] = {k: v[:3] for k, v in kept.items()}
        pool = {p: {} for p in players}
        for name, (p, t, s, spec) in kept.items():
            types[name] = spec
            plays[name], label_of[name] = s, spec.payoff_type
            pool[p].setdefault(t, []).append(name)
        chosen = {}
        for m in models:
            for name, (p, t, s) in levels[level].items():
                if p == m.player and t == m.root and s in form.outcome_class(targets[m.player]):
                    chosen[m.player] = name
                    break
        done = level >= K and len(chosen) == len(models)
        if done or level >= K + extra_levels or not kept:
            break

    final_ts = TypeStructure(players, types)
    out = [SubjectiveModel(m.player, structure(level, m.player), final_ts, chosen[m.player]) for m in models if m.player in chosen]
    missing = [(m.player, m.root, targets[m.player].label) for m in models if m.player not in chosen]
    return Selection(out, level, levels, missing)


def selection_targets(models: Sequence[SubjectiveModel], outcome: Node) -> dict[str, Strategy]:
    """Root strategies, one per player, that survive forward induction and produce ``outcome``."""
    from .solvers import efr

    trace = efr(models)
    sets = [sorted(trace.final(i)) for i in range(len(models))]
    for combo in product(*sets):
        if trace.form.outcome(list(combo)) == outcome:
            return {s.player: s for s in combo}
    raise ValueError(f"{outcome} is not a forward-induction outcome of the model")
