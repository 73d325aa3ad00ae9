"""Standard payoff structures, canonical representations, Hausdorff distance, richness."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

from .forms import ExtensiveForm, Node, Strategy

Matrix = tuple  # tuple over players of tuple over terminals of Fraction
State = tuple  # (nature label, (payoff type label per player, in player order))


class StandardPayoffStructure:
    """Nature states, per-player payoff types and exact utilities.

    ``origin`` optionally maps generated payoff-type labels to the label they
    were derived from; it is metadata used by distances and generators.
    """

    def __init__(
        self,
        form: ExtensiveForm,
        nature: Sequence[str],
        types: Mapping[str, Sequence[str]],
        payoff: Mapping[State, Matrix],
        origin: Mapping[str, str] | None = None,
    ):
        self.form = form
        self.nature = tuple(nature)
        self.types = {p: tuple(types[p]) for p in form.players}
        self.payoff = {
            (s[0], tuple(s[1])): tuple(tuple(Fraction(v) for v in row) for row in m)
            for s, m in payoff.items()
        }
        self.origin = dict(origin or {})

    @classmethod
    def build(
        cls,
        form: ExtensiveForm,
        nature: Sequence[str],
        types: Mapping[str, Sequence[str]],
        utility: Callable[[str, Node, State], object],
        origin: Mapping[str, str] | None = None,
    ) -> "StandardPayoffStructure":
        types = {p: tuple(types[p]) for p in form.players}
        payoff = {}
        for t0 in nature:
            for prof in product(*(types[p] for p in form.players)):
                st = (t0, prof)
                payoff[st] = tuple(
                    tuple(Fraction(utility(p, z, st)) for z in form.terminals) for p in form.players
                )
        return cls(form, nature, types, payoff, origin)

    @classmethod
    def single_state(cls, form: ExtensiveForm, table: Mapping[Node, Sequence], label: str = "θ") -> "StandardPayoffStructure":
        """One nature state and one payoff type per player; ``table`` maps terminal -> payoff vector."""
        return cls.build(
            form,
            ("θ0",),
            {p: (label,) for p in form.players},
            lambda p, z, st: table[z][form.players.index(p)],
        )

    # -- accessors ------------------------------------------------------------
    @property
    def players(self) -> tuple[str, ...]:
        return self.form.players

    def states(self) -> list[State]:
        return [(t0, prof) for t0 in self.nature for prof in product(*(self.types[p] for p in self.players))]

    def matrix(self, state: State) -> Matrix:
        try:
            return self.payoff[(state[0], tuple(state[1]))]
        except KeyError:
            raise KeyError(f"payoff state {state!r} not in structure") from None

    def utility(self, player: str, z: Node, state: State) -> Fraction:
        return self.matrix(state)[self.players.index(player)][self._zidx[z]]

    @cached_property
    def _zidx(self) -> dict[Node, int]:
        return {z: k for k, z in enumerate(self.form.terminals)}

    def base_label(self, label: str) -> str:
        seen = set()
        while label in self.origin and label not in seen:
            seen.add(label)
            label = self.origin[label]
        return label

    def _key(self):
        return (
            self.form,
            self.nature,
            tuple(self.types[p] for p in self.players),
            tuple(sorted(self.payoff.items())),
        )

    def __eq__(self, other):
        return isinstance(other, StandardPayoffStructure) and self._key() == other._key()

    def __hash__(self):
        return self._hash

    @cached_property
    def _hash(self):
        return hash(self._key())

    def __repr__(self):
        sizes = "x".join(str(len(self.types[p])) for p in self.players)
        return f"StandardPayoffStructure(nature={len(self.nature)}, types={sizes})"

    def validate(self) -> list[str]:
        report = []
        if not self.nature:
            report.append("empty set of nature states")
        for p in self.players:
            if not self.types[p]:
                report.append(f"player {p}: empty set of payoff types")
        for st in self.states():
            if st not in self.payoff:
                report.append(f"missing utilities at state {st}")
            elif len(self.payoff[st]) != len(self.players) or any(
                len(r) != len(self.form.terminals) for r in self.payoff[st]
            ):
                report.append(f"utility matrix at {st} has the wrong shape")
        return report


@dataclass(frozen=True)
class CanonicalRepresentation:
    players: tuple
    terminals: tuple
    level0: frozenset
    per_player: tuple  # ((player, frozenset of frozensets of matrices), ...)

    def slices(self, player: str) -> frozenset:
        return dict(self.per_player)[player]


def canonicalize(ups: StandardPayoffStructure) -> CanonicalRepresentation:
    level0 = frozenset(ups.matrix(st) for st in ups.states())
    per = []
    for k, p in enumerate(ups.players):
        fam = frozenset(
            frozenset(ups.matrix(st) for st in ups.states() if st[1][k] == ti) for ti in ups.types[p]
        )
        per.append((p, fam))
    return CanonicalRepresentation(ups.players, ups.form.terminals, level0, tuple(per))


def sup_norm(a: Matrix, b: Matrix) -> Fraction:
    return max((abs(x - y) for ra, rb in zip(a, b) for x, y in zip(ra, rb)), default=Fraction(0))


def hausdorff(a: Iterable, b: Iterable, dist: Callable) -> Fraction:
    a, b = list(a), list(b)
    if not a and not b:
        return Fraction(0)
    if not a or not b:
        raise ValueError("Hausdorff distance with an empty set")
    d = [[dist(x, y) for y in b] for x in a]
    left = max(min(row) for row in d)
    right = max(min(d[i][j] for i in range(len(a))) for j in range(len(b)))
    return max(left, right)


def hausdorff_distance(a: CanonicalRepresentation, b: CanonicalRepresentation) -> Fraction:
    if a.players != b.players or a.terminals != b.terminals:
        raise ValueError("canonical representations over different players or terminals")
    out = hausdorff(a.level0, b.level0, sup_norm)
    for p in a.players:
        out = max(out, hausdorff(a.slices(p), b.slices(p), lambda x, y: hausdorff(x, y, sup_norm)))
    return out


def structure_distance(u: StandardPayoffStructure, v: StandardPayoffStructure) -> Fraction:
    return hausdorff_distance(canonicalize(u), canonicalize(v))


# -- dominance and richness ---------------------------------------------------

def is_conditionally_dominant(ups: StandardPayoffStructure, state: State, player: str, s: Strategy) -> bool:
    form = ups.form
    opp = form.opponents(player)
    for h in form.own_reachable_histories(s):
        rivals = [t for t in form.strategies(player) if t[h] != s[h]]
        for prof in product(*(form.reaching_strategies(h, j) for j in opp)):
            base = {q.player: q for q in prof}
            mine = ups.utility(player, form.outcome({**base, player: s}, h), state)
            for t in rivals:
                if mine <= ups.utility(player, form.outcome({**base, player: t}, h), state):
                    return False
    return True


def _others_equivalent(ups: StandardPayoffStructure, player: str, a: str, b: str) -> bool:
    k = ups.players.index(player)
    for st in ups.states():
        if st[1][k] != a:
            continue
        prof = list(st[1])
        prof[k] = b
        other = (st[0], tuple(prof))
        ma, mb = ups.matrix(st), ups.matrix(other)
        if any(ma[j] != mb[j] for j in range(len(ups.players)) if j != k):
            return False
    return True


def dominance_types(ups: StandardPayoffStructure, player: str, s: Strategy) -> list[str]:
    """Payoff types at which s is conditionally dominant at every state carrying them."""
    k = ups.players.index(player)
    return [
        w for w in ups.types[player]
        if all(is_conditionally_dominant(ups, st, player, s) for st in ups.states() if st[1][k] == w)
    ]


def is_rich(ups: StandardPayoffStructure) -> tuple[bool, dict]:
    """Richness check; returns (flag, witness map (player, type, strategy) -> type)."""
    witness = {}
    for p in ups.players:
        for s in ups.form.strategies(p):
            dom = dominance_types(ups, p, s)
            for ti in ups.types[p]:
                ranked = sorted(dom, key=lambda w: ups.origin.get(w) != ti)
                w = next((w for w in ranked if _others_equivalent(ups, p, ti, w)), None)
                if w is None:
                    return False, {}
                witness[(p, ti, s)] = w
    return True, witness
