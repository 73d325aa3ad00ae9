"""Subjective payoff structures, finite type structures and subjective models."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

from .lp import LinearProgram
from .payoffs import StandardPayoffStructure, canonicalize, hausdorff_distance, is_rich


class SubjectivePayoffStructure:
    """A finite hierarchy of standard payoff structures.

    ``ascriptions`` maps each opponent j to the structure this one ascribes to
    j.  An empty map means common knowledge of ``level1`` from here on: the
    structure ascribes itself to every opponent.
    """

    def __init__(self, level1: StandardPayoffStructure, ascriptions: Mapping[str, "SubjectivePayoffStructure"] | None = None):
        self.level1 = level1
        self.ascriptions = dict(ascriptions or {})

    @property
    def is_common_knowledge(self) -> bool:
        return not self.ascriptions

    @property
    def tail_flag(self) -> bool:
        """Levels past the deepest stated one repeat it (always true for finite hierarchies)."""
        return True

    def ascribed(self, j: str) -> "SubjectivePayoffStructure":
        if not self.ascriptions:
            return self
        try:
            return self.ascriptions[j]
        except KeyError:
            raise KeyError(f"no structure ascribed to player {j}") from None

    @cached_property
    def depth(self) -> int:
        return 1 + max((d.depth for d in self.ascriptions.values()), default=0)

    @cached_property
    def _key(self):
        return (self.level1, tuple(sorted((j, d._key) for j, d in self.ascriptions.items())))

    def __eq__(self, other):
        return isinstance(other, SubjectivePayoffStructure) and self._key == other._key

    def __hash__(self):
        return self._hash

    @cached_property
    def _hash(self):
        return hash(self._key)

    def __repr__(self):
        return f"SubjectivePayoffStructure(depth={self.depth}, ck={self.is_common_knowledge})"

    def structures(self) -> list[StandardPayoffStructure]:
        out, stack, seen = [], [self], set()
        while stack:
            d = stack.pop()
            if id(d) in seen:
                continue
            seen.add(id(d))
            out.append(d.level1)
            stack.extend(d.ascriptions.values())
        return out


def common_knowledge(ups: StandardPayoffStructure) -> SubjectivePayoffStructure:
    return SubjectivePayoffStructure(ups)


@dataclass(frozen=True)
class TypeSpec:
    player: str
    payoff_type: str
    belief: tuple  # ((nature label, opponent labels in player order), probability), ...

    def belief_map(self) -> dict:
        return dict(self.belief)


class TypeStructure:
    """Finite types: a payoff-type label plus a belief over (nature, opponent types)."""

    def __init__(self, players: Sequence[str], types: Mapping[str, TypeSpec | tuple]):
        self.players = tuple(players)
        self.types: dict[str, TypeSpec] = {}
        for label, spec in types.items():
            if not isinstance(spec, TypeSpec):
                player, payoff, belief = spec
                spec = make_type(player, payoff, belief)
            self.types[label] = spec

    def __getitem__(self, label: str) -> TypeSpec:
        return self.types[label]

    def __contains__(self, label) -> bool:
        return label in self.types

    def of_player(self, player: str) -> list[str]:
        return [t for t, spec in self.types.items() if spec.player == player]

    def opponents(self, player: str) -> tuple[str, ...]:
        return tuple(p for p in self.players if p != player)

    def _key(self):
        return (self.players, tuple(sorted(self.types.items())))

    def __eq__(self, other):
        return isinstance(other, TypeStructure) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def validate(self) -> list[str]:
        report = []
        for label, spec in self.types.items():
            if spec.player not in self.players:
                report.append(f"type {label}: unknown player {spec.player}")
                continue
            opp = self.opponents(spec.player)
            total = Fraction(0)
            for (t0, prof), pr in spec.belief:
                total += pr
                if pr < 0:
                    report.append(f"type {label}: negative probability")
                if len(prof) != len(opp):
                    report.append(f"type {label}: belief atom {prof} has the wrong arity")
                    continue
                for j, tj in zip(opp, prof):
                    if tj not in self.types:
                        report.append(f"type {label}: dangling opponent type {tj}")
                    elif self.types[tj].player != j:
                        report.append(f"type {label}: {tj} is not a type of player {j}")
            if total != 1:
                report.append(f"type {label}: probabilities sum to {total}")
        return report


def make_type(player: str, payoff_type: str, belief: Mapping) -> TypeSpec:
    items = []
    for (t0, prof), pr in belief.items():
        if isinstance(prof, str):
            prof = (prof,)
        pr = Fraction(pr)
        if pr:
            items.append(((t0, tuple(prof)), pr))
    return TypeSpec(player, payoff_type, tuple(sorted(items)))


@dataclass(frozen=True)
class SubjectiveModel:
    player: str
    structure: SubjectivePayoffStructure
    types: TypeStructure
    root: str


# -- validation --------------------------------------------------------------

def _own_slices(ups: StandardPayoffStructure, j: str) -> frozenset:
    """Player j's slices projected onto j's own utility rows."""
    k = ups.players.index(j)
    return frozenset(
        frozenset(ups.matrix(st)[k] for st in ups.states() if st[1][k] == tj) for tj in ups.types[j]
    )


def validate_hierarchy(d: SubjectivePayoffStructure, owner: str | None = None, literal: bool = False) -> list[str]:
    """Coherence of every level: j's slices agree between a level and what it ascribes to j.

    By default slices are compared on j's own utilities; ``literal`` compares
    the full canonical slices.
    """
    report: list[str] = []
    seen: set = set()

    def visit(node: SubjectivePayoffStructure, own: str | None, path: tuple):
        if (id(node), own) in seen or node.is_common_knowledge:
            return
        seen.add((id(node), own))
        for j, sub in sorted(node.ascriptions.items()):
            if own is not None and j == own:
                report.append(f"{'/'.join(path) or 'root'}: structure ascribed to its own player {j}")
                continue
            a, b = node.level1, sub.level1
            if literal:
                same = canonicalize(a).slices(j) == canonicalize(b).slices(j)
            else:
                same = _own_slices(a, j) == _own_slices(b, j)
            if not same:
                report.append(f"{'/'.join(path) or 'root'}: player {j}'s payoff-type slices differ in the structure ascribed to {j}")
            visit(sub, j, path + (j,))

    visit(d, owner, ())
    return report


def awareness_lint(d: SubjectivePayoffStructure) -> list[str]:
    """Flags ascribed nature states the ascribing level does not contain."""
    out = []
    for j, sub in sorted(d.ascriptions.items()):
        extra = set(sub.level1.nature) - set(d.level1.nature)
        if extra:
            out.append(f"structure ascribed to {j} contains unseen nature states {sorted(extra)}")
        out.extend(awareness_lint(sub))
    return out


def _consistency_table(d: SubjectivePayoffStructure, ts: TypeStructure, owner: str) -> dict:
    """Greatest fixpoint of the consistency relation over reachable (structure, player, type) triples."""
    nodes: dict = {}
    stack = [(d, owner)]
    while stack:
        node, p = stack.pop()
        if (id(node), p) in nodes:
            continue
        nodes[(id(node), p)] = (node, p)
        for j in ts.opponents(p):
            stack.append((node.ascribed(j), j))
    alive = {(k, t) for k, (node, p) in nodes.items() for t in ts.of_player(p)}

    def ok(key, t) -> bool:
        node, p = nodes[key]
        spec = ts[t]
        ups = node.level1
        if spec.payoff_type not in ups.types[p]:
            return False
        opp = ts.opponents(p)
        for (t0, prof), _ in spec.belief:
            if t0 not in ups.nature:
                return False
            for j, tj in zip(opp, prof):
                if tj not in ts or ts[tj].player != j or ts[tj].payoff_type not in ups.types[j]:
                    return False
                if ((id(node.ascribed(j)), j), tj) not in alive:
                    return False
        return True

    changed = True
    while changed:
        changed = False
        for key_t in sorted(alive, key=lambda x: (str(x[0][1]), x[1], x[0][0])):
            if key_t in alive and not ok(*key_t):
                alive.discard(key_t)
                changed = True
    return {(nodes[k][0], nodes[k][1], t): True for k, t in alive}


def consistent_types(d: SubjectivePayoffStructure, ts: TypeStructure, player: str) -> frozenset[str]:
    table = _consistency_table(d, ts, player)
    return frozenset(t for (node, p, t) in table if node is d and p == player)


def type_consistency(d: SubjectivePayoffStructure, ts: TypeStructure, t: str) -> bool:
    if t not in ts:
        raise KeyError(f"dangling type label {t!r}")
    return t in consistent_types(d, ts, ts[t].player)


def validate_model(m: SubjectiveModel) -> list[str]:
    report = list(m.types.validate())
    if m.root not in m.types:
        return report + [f"root type {m.root} not in type structure"]
    if m.types[m.root].player != m.player:
        report.append(f"root type {m.root} belongs to player {m.types[m.root].player}")
    if not report and not type_consistency(m.structure, m.types, m.root):
        report.append(f"root type {m.root} is not consistent with the subjective structure")
    return report


def higher_order_richness(d: SubjectivePayoffStructure, owner: str | None = None) -> int | None:
    """Smallest k <= depth at which k-th order richness holds, else None."""
    bound = d.depth
    rich_cache: dict = {}

    def rich(ups):
        if ups not in rich_cache:
            rich_cache[ups] = is_rich(ups)[0]
        return rich_cache[ups]

    def orders(node, own, limit) -> set[int]:
        out = {1} if rich(node.level1) else set()
        if limit <= 1:
            return out & set(range(1, limit + 1))
        if node.is_common_knowledge:
            return set(range(1, limit + 1)) if 1 in out else set()
        players = [j for j in node.ascriptions if j != own]
        common = None
        for j in players:
            sub = {k + 1 for k in orders(node.ascriptions[j], j, limit - 1)}
            common = sub if common is None else common & sub
        return out | (common or set())

    found = orders(d, owner, bound)
    return min(found) if found else None


# -- model distance ----------------------------------------------------------

BELIEF_ORDERS = 6


def _kantorovich(p: dict, q: dict, cost) -> Fraction:
    if len(p) == 1 and len(q) == 1:
        return cost(next(iter(p)), next(iter(q)))
    lp = LinearProgram()
    pa, qb = sorted(p), sorted(q)
    obj = {}
    for a in pa:
        lp.eq({("g", a, b): 1 for b in qb}, p[a])
    for b in qb:
        lp.eq({("g", a, b): 1 for a in pa}, q[b])
    for a in pa:
        for b in qb:
            c = cost(a, b)
            if c:
                obj[("g", a, b)] = -c
            else:
                lp.var(("g", a, b))
    res = lp.maximize(obj)
    return -res.value


@dataclass
class _TypeMetric:
    ta: TypeStructure
    tb: TypeStructure
    base_a: dict = field(default_factory=dict)
    base_b: dict = field(default_factory=dict)
    memo: dict = field(default_factory=dict)

    def base(self, origin, label):
        seen = set()
        while label in origin and label not in seen:
            seen.add(label)
            label = origin[label]
        return label

    def dist(self, k: int, a: str, b: str) -> Fraction:
        key = (k, a, b)
        if key in self.memo:
            return self.memo[key]
        sa, sb = self.ta[a], self.tb[b]
        d0 = Fraction(int(self.base(self.base_a, sa.payoff_type) != self.base(self.base_b, sb.payoff_type)))
        if k == 0 or d0 == 1:
            out = d0
        else:
            def cost(x, y):
                if self.base(self.base_a, x[0]) != self.base(self.base_b, y[0]):
                    return Fraction(1)
                return max((self.dist(k - 1, u, v) for u, v in zip(x[1], y[1])), default=Fraction(0))

            out = max(d0, _kantorovich(sa.belief_map(), sb.belief_map(), cost))
        self.memo[key] = out
        return out


def _origins(d: SubjectivePayoffStructure) -> dict:
    out = {}
    for ups in d.structures():
        out.update(ups.origin)
    return out


def structure_tail_distance(a: SubjectivePayoffStructure, b: SubjectivePayoffStructure, owner: str, players: Sequence[str]) -> Fraction:
    """Sum over orders k of 2^-k times the largest Hausdorff gap among order-k ascriptions."""
    depth = max(a.depth, b.depth)
    total = Fraction(0)
    frontier = [(a, b, owner)]
    cache: dict = {}

    def gap(x, y):
        key = (x.level1, y.level1)
        if key not in cache:
            cache[key] = hausdorff_distance(canonicalize(x.level1), canonicalize(y.level1))
        return cache[key]

    for k in range(1, depth + 1):
        s_k = max(gap(x, y) for x, y, _ in frontier)
        if k < depth:
            total += s_k / 2**k
            frontier = [(x.ascribed(j), y.ascribed(j), j) for x, y, own in frontier for j in players if j != own]
        else:
            total += s_k / 2 ** (k - 1)  # orders k, k+1, ... all equal s_k
    return total


def model_distance(m: Sequence[SubjectiveModel] | SubjectiveModel, n: Sequence[SubjectiveModel] | SubjectiveModel) -> Fraction:
    """Pseudometric on profiles of subjective models (max over players)."""
    if isinstance(m, SubjectiveModel):
        m, n = [m], [n]
    if len(m) != len(n):
        raise ValueError("profiles of different sizes")
    best = Fraction(0)
    for x, y in zip(m, n):
        if x.player != y.player:
            raise ValueError("profiles list players in different orders")
        players = x.types.players
        total = structure_tail_distance(x.structure, y.structure, x.player, players)
        metric = _TypeMetric(x.types, y.types, _origins(x.structure), _origins(y.structure))
        for k in range(1, BELIEF_ORDERS + 1):
            total += metric.dist(k, x.root, y.root) / 2**k
        best = max(best, total)
    return best
