"""Conditional probability systems over opponents' strategies, states and types."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping, Sequence

from .epistemic import SubjectiveModel, TypeStructure, consistent_types
from .forms import ROOT, ExtensiveForm, HistorySet, Node, Strategy, fmt_node
from .payoffs import StandardPayoffStructure

Atom = tuple  # (opponent strategy profile, nature label, opponent type profile)


class Frame:
    """Player i's decision problem: atoms, conditioning histories and payoffs.

    Atoms are triples (s_-i, θ0, t_-i) with θ0 from the player's level-1
    structure and t_-i drawn from the opponents' admissible type sets.
    """

    def __init__(
        self,
        ups: StandardPayoffStructure,
        player: str,
        payoff_type: str,
        types: TypeStructure,
        opp_types: Mapping[str, Sequence[str]],
        prior: Mapping[tuple, Fraction],
    ):
        self.ups = ups
        self.form: ExtensiveForm = ups.form
        self.player = player
        self.payoff_type = payoff_type
        self.types = types
        self.opponents = self.form.opponents(player)
        self.opp_types = {j: tuple(opp_types[j]) for j in self.opponents}
        self.prior = {k: Fraction(v) for k, v in prior.items() if v}
        if payoff_type not in ups.types[player]:
            raise KeyError(f"payoff type {payoff_type!r} not in player {player}'s level-1 types")
        self.atoms: list[Atom] = [
            (sp, t0, tp)
            for sp in product(*(self.form.strategies(j) for j in self.opponents))
            for t0 in ups.nature
            for tp in product(*(self.opp_types[j] for j in self.opponents))
        ]
        self.index = {a: k for k, a in enumerate(self.atoms)}
        hs = self.form.player_nodes(player)
        self.histories: tuple[Node, ...] = (ROOT,) + tuple(h for h in hs if h != ROOT)
        self.strategies = self.form.strategies(player)

    @classmethod
    def from_model(cls, model: SubjectiveModel) -> "Frame":
        d, ts = model.structure, model.types
        opp = {j: sorted(consistent_types(d.ascribed(j), ts, j)) for j in ts.opponents(model.player)}
        spec = ts[model.root]
        return cls(d.level1, model.player, spec.payoff_type, ts, opp, spec.belief_map())

    @cached_property
    def reach(self) -> dict[Node, frozenset[int]]:
        out = {}
        for h in self.form.nodes:
            sets = [self.form.reaching_strategies(h, j) for j in self.opponents]
            out[h] = frozenset(k for k, a in enumerate(self.atoms) if all(s in S for s, S in zip(a[0], sets)))
        return out

    def state_of(self, atom: Atom) -> tuple:
        sp, t0, tp = atom
        labels = dict(zip(self.opponents, (self.types[t].payoff_type for t in tp)))
        labels[self.player] = self.payoff_type
        return (t0, tuple(labels[p] for p in self.form.players))

    @cached_property
    def _states(self) -> list[tuple]:
        return [self.state_of(a) for a in self.atoms]

    def utilities(self, s: Strategy, h: Node) -> tuple[Fraction, ...]:
        """u_i(z(s_-i; s | h), θ) for every atom."""
        key = (s, h)
        cache = self.__dict__.setdefault("_ucache", {})
        if key not in cache:
            vals = []
            zcache: dict = {}
            for a, st in zip(self.atoms, self._states):
                sp = a[0]
                if sp not in zcache:
                    prof = {q.player: q for q in sp}
                    prof[self.player] = s
                    zcache[sp] = self.form.outcome(prof, h)
                vals.append(self.ups.utility(self.player, zcache[sp], st))
            cache[key] = tuple(vals)
        return cache[key]

    def prior_atoms(self) -> dict[tuple, list[int]]:
        """Atoms grouped by their (θ0, t_-i) marginal."""
        out: dict[tuple, list[int]] = {}
        for k, (sp, t0, tp) in enumerate(self.atoms):
            out.setdefault((t0, tp), []).append(k)
        return out


@dataclass(frozen=True)
class ConditionalProbabilitySystem:
    owner: str
    beliefs: tuple  # ((history, ((atom, probability), ...)), ...)

    @classmethod
    def of(cls, owner: str, beliefs: Mapping[Node, Mapping[Atom, Fraction]]) -> "ConditionalProbabilitySystem":
        items = []
        for h in sorted(beliefs, key=lambda h: (len(h), str(h))):
            mu = tuple(sorted(((a, Fraction(p)) for a, p in beliefs[h].items() if p), key=lambda x: _atom_key(x[0])))
            items.append((h, mu))
        return cls(owner, tuple(items))

    def at(self, h: Node) -> dict[Atom, Fraction]:
        for g, mu in self.beliefs:
            if g == h:
                return dict(mu)
        raise KeyError(f"no belief at {fmt_node(h)}")

    @property
    def histories(self) -> list[Node]:
        return [h for h, _ in self.beliefs]


def _atom_key(a: Atom):
    return (tuple(s.label for s in a[0]), a[1], a[2])


def _frame(model_or_frame) -> Frame:
    return model_or_frame if isinstance(model_or_frame, Frame) else Frame.from_model(model_or_frame)


def _mass(mu: Mapping[Atom, Fraction], form: ExtensiveForm, h: Node) -> Fraction:
    return sum((p for a, p in mu.items() if all(form.consistent_with_path(s, h) for s in a[0])), Fraction(0))


def validate_cps(form: ExtensiveForm, model, mu: ConditionalProbabilitySystem) -> list[str]:
    fr = _frame(model)
    report: list[str] = []
    known = set(fr.atoms)
    hs = fr.histories
    for h in hs:
        try:
            b = mu.at(h)
        except KeyError:
            report.append(f"{fmt_node(h)}: missing belief")
            continue
        if sum(b.values(), Fraction(0)) != 1:
            report.append(f"{fmt_node(h)}: probabilities do not sum to 1")
        for a, p in b.items():
            if p < 0:
                report.append(f"{fmt_node(h)}: negative probability")
            if a not in known:
                report.append(f"{fmt_node(h)}: atom outside S_-i x nature x admissible opponent types")
            elif fr.index[a] not in fr.reach[h]:
                report.append(f"{fmt_node(h)}: support violation, {'/'.join(s.label for s in a[0])} does not reach {fmt_node(h)}")
    if report:
        return report
    for h in hs:
        for g in hs:
            if g != h and form.precedes(h, g):
                bh = mu.at(h)
                m = _mass(bh, form, g)
                if m > 0:
                    cond = {a: p / m for a, p in bh.items() if fr.index[a] in fr.reach[g]}
                    if cond != {a: p for a, p in mu.at(g).items() if p}:
                        report.append(f"{fmt_node(g)}: chain rule violated relative to {fmt_node(h)}")
    marg: dict = {}
    for (sp, t0, tp), p in mu.at(ROOT).items():
        marg[(t0, tp)] = marg.get((t0, tp), Fraction(0)) + p
    if {k: v for k, v in marg.items() if v} != fr.prior:
        report.append("h0: marginal on (state, opponent types) differs from the type's belief")
    return report


def expected_utility(model, mu: ConditionalProbabilitySystem, s: Strategy, h: Node) -> Fraction:
    fr = _frame(model)
    vals = fr.utilities(s, h)
    return sum((p * vals[fr.index[a]] for a, p in mu.at(h).items()), Fraction(0))


def best_responses(model, mu: ConditionalProbabilitySystem) -> frozenset[Strategy]:
    fr = _frame(model)
    form = fr.form
    best = {}
    for h in fr.histories:
        if h == ROOT and fr.player not in form.active(ROOT):
            continue
        eu = {s: expected_utility(fr, mu, s, h) for s in fr.strategies}
        best[h] = max(eu.values()), eu
    out = []
    for s in fr.strategies:
        if all(best[h][1][s] == best[h][0] for h in form.own_reachable_histories(s)):
            out.append(s)
    return frozenset(out)


def scratch_histories(mu: ConditionalProbabilitySystem, form: ExtensiveForm) -> HistorySet:
    hs = mu.histories
    out = [ROOT]
    for h in hs:
        if h == ROOT:
            continue
        preds = [g for g in hs if g != h and form.precedes(g, h)]
        if all(_mass(mu.at(g), form, h) == 0 for g in preds):
            out.append(h)
    return HistorySet(out, tag="H_i(mu_i)")


def reconstruct(mu_scratch: Mapping[Node, Mapping[Atom, Fraction]], histories: Iterable[Node], form: ExtensiveForm, owner: str) -> ConditionalProbabilitySystem:
    """Rebuild a full CPS from its beliefs at scratch histories by conditioning."""
    beliefs: dict = {}
    for h in sorted(histories, key=len):
        if h in mu_scratch:
            beliefs[h] = dict(mu_scratch[h])
            continue
        preds = sorted((g for g in beliefs if g != h and form.precedes(g, h)), key=len, reverse=True)
        for g in preds:
            m = _mass(beliefs[g], form, h)
            if m > 0:
                beliefs[h] = {
                    a: p / m for a, p in beliefs[g].items()
                    if all(form.consistent_with_path(s, h) for s in a[0])
                }
                break
        else:
            raise ValueError(f"{fmt_node(h)} is null under every predecessor but has no stored belief")
    return ConditionalProbabilitySystem.of(owner, beliefs)


def cps_to_text(mu: ConditionalProbabilitySystem) -> dict:
    return {
        fmt_node(h): [["/".join(s.label for s in a[0]), a[1], list(a[2]), str(p)] for a, p in b]
        for h, b in mu.beliefs
    }
