"""Finite extensive forms with observed actions.

Histories are tuples of moves.  A move is a bare action string when one
player is active and a tuple of actions (in player order) when several are.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

Node = tuple
ROOT: Node = ()


def fmt_node(h: Node) -> str:
    if h == ROOT:
        return "h0"
    parts = ["[" + "|".join(m) + "]" if isinstance(m, tuple) else m for m in h]
    return parts[0] if len(parts) == 1 else "(" + ",".join(parts) + ")"


def parse_node(text: str) -> Node:
    text = text.strip()
    if text in ("h0", "()", ""):
        return ROOT
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    out = []
    for part in text.split(","):
        part = part.strip()
        if part.startswith("["):
            out.append(tuple(part[1:-1].split("|")))
        else:
            out.append(part)
    return tuple(out)


@dataclass(frozen=True, order=True)
class Strategy:
    """A full contingent plan: one action at every node where the player moves."""

    player: str
    choices: tuple  # ((node, action), ...) in the form's canonical node order

    def __getitem__(self, h: Node) -> str:
        for node, a in self.choices:
            if node == h:
                return a
        raise KeyError(h)

    @property
    def label(self) -> str:
        return "".join(a for _, a in self.choices) or "-"

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"Strategy({self.player}:{self.label})"


class HistorySet(frozenset):
    """A frozenset of nodes that remembers which operator produced it."""

    def __new__(cls, nodes: Iterable[Node] = (), tag: str = ""):
        obj = super().__new__(cls, nodes)
        obj.tag = tag
        return obj

    def __repr__(self) -> str:
        inner = ", ".join(fmt_node(h) for h in sorted(self, key=_node_key))
        return f"HistorySet[{self.tag}]{{{inner}}}"


def _node_key(h: Node):
    return (len(h), [m if isinstance(m, str) else "|".join(m) for m in h])


CHANCE_NAMES = frozenset({"chance", "nature"})


class ExtensiveForm:
    """Game tree given by the active players' action sets at each partial history.

    ``moves`` maps every non-terminal node to ``{player: actions}`` for the
    players active there.  Terminals are the children not listed in ``moves``.
    Construction does not enforce the structural rules; use
    :func:`validate_extensive_form`.
    """

    def __init__(self, players: Sequence[str], moves: Mapping[Node, Mapping[str, Sequence[str]]]):
        self.players: tuple[str, ...] = tuple(players)
        self._moves = {
            tuple(h): {p: tuple(acts[p]) for p in self.players if p in acts}
            for h, acts in moves.items()
        }
        self._undeclared = sorted(
            {(fmt_node(tuple(h)), p) for h, acts in moves.items() for p in acts if p not in self.players}
        )

    # -- identity -----------------------------------------------------------
    def _key(self):
        return (
            self.players,
            tuple(sorted(((h, tuple(sorted(a.items()))) for h, a in self._moves.items()),
                         key=lambda x: _node_key(x[0]))),
        )

    def __eq__(self, other):
        return isinstance(other, ExtensiveForm) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"ExtensiveForm(players={self.players}, nodes={len(self._moves)})"

    # -- tree structure -----------------------------------------------------
    def active(self, h: Node) -> dict[str, tuple[str, ...]]:
        return dict(self._moves.get(h, {}))

    def is_terminal(self, h: Node) -> bool:
        return h not in self._moves

    def moves_at(self, h: Node) -> list:
        acts = self._moves[h]
        order = [p for p in self.players if p in acts]
        if len(order) == 1:
            return list(acts[order[0]])
        return [tuple(c) for c in product(*(acts[p] for p in order))]

    def move_of(self, h: Node, profile_actions: Mapping[str, str]):
        acts = self._moves[h]
        order = [p for p in self.players if p in acts]
        if len(order) == 1:
            return profile_actions[order[0]]
        return tuple(profile_actions[p] for p in order)

    def action_in_move(self, h: Node, move, player: str) -> str | None:
        acts = self._moves[h]
        order = [p for p in self.players if p in acts]
        if player not in order:
            return None
        if len(order) == 1:
            return move
        return move[order.index(player)]

    @cached_property
    def nodes(self) -> tuple[Node, ...]:
        """Partial histories in canonical order (depth, then declared action order)."""
        out, frontier = [], [ROOT]
        while frontier:
            nxt = []
            for h in frontier:
                if h in self._moves:
                    out.append(h)
                    nxt.extend(h + (m,) for m in self.moves_at(h))
            frontier = nxt
        return tuple(out)

    @cached_property
    def terminals(self) -> tuple[Node, ...]:
        out = []
        for h in self.nodes:
            out.extend(h + (m,) for m in self.moves_at(h) if self.is_terminal(h + (m,)))
        return tuple(sorted(out, key=self._dfs_rank))

    def _dfs_rank(self, z: Node):
        rank = []
        for k, m in enumerate(z):
            rank.append(self.moves_at(z[:k]).index(m))
        return rank

    def player_nodes(self, player: str) -> tuple[Node, ...]:
        return tuple(h for h in self.nodes if player in self._moves[h])

    def precedes(self, h: Node, g: Node) -> bool:
        """Weak precedence h ≼ g."""
        return g[: len(h)] == h

    # -- strategies ---------------------------------------------------------
    def _check_player(self, player: str):
        if player not in self.players:
            raise KeyError(f"unknown player {player!r}")

    def strategies(self, player: str) -> tuple[Strategy, ...]:
        self._check_player(player)
        return self._strategies[player]

    @cached_property
    def _strategies(self) -> dict[str, tuple[Strategy, ...]]:
        out = {}
        for p in self.players:
            hs = self.player_nodes(p)
            out[p] = tuple(
                Strategy(p, tuple(zip(hs, combo)))
                for combo in product(*(self._moves[h][p] for h in hs))
            )
        return out

    def strategy(self, player: str, label: str) -> Strategy:
        hits = [s for s in self.strategies(player) if s.label == label]
        if len(hits) != 1:
            raise KeyError(f"no unique strategy {label!r} for {player}")
        return hits[0]

    def opponents(self, player: str) -> tuple[str, ...]:
        return tuple(p for p in self.players if p != player)

    def profiles(self, players: Sequence[str]) -> list[tuple[Strategy, ...]]:
        return list(product(*(self.strategies(p) for p in players)))

    # -- play ---------------------------------------------------------------
    def outcome(self, profile: Mapping[str, Strategy] | Iterable[Strategy], start: Node = ROOT) -> Node:
        if not isinstance(profile, Mapping):
            profile = {s.player: s for s in profile}
        h = start
        while not self.is_terminal(h):
            acts = {p: profile[p][h] for p in self._moves[h]}
            h = h + (self.move_of(h, acts),)
        return h

    def consistent_with_path(self, s: Strategy, h: Node) -> bool:
        """True iff s takes its own component of every move on the path to h."""
        for k, m in enumerate(h):
            a = self.action_in_move(h[:k], m, s.player)
            if a is not None and s[h[:k]] != a:
                return False
        return True

    def reaching_strategies(self, h: Node, player: str) -> frozenset[Strategy]:
        self._check_player(player)
        return self._reach[(h, player)]

    @cached_property
    def _reach(self):
        out = {}
        for h in self.nodes + self.terminals:
            for p in self.players:
                out[(h, p)] = frozenset(s for s in self._strategies[p] if self.consistent_with_path(s, h))
        return out

    def own_reachable_histories(self, s: Strategy) -> HistorySet:
        return HistorySet(
            (h for h in self.player_nodes(s.player) if s in self._reach[(h, s.player)]),
            tag="H_i(s_i)",
        )

    def outcome_class(self, s: Strategy) -> frozenset[Strategy]:
        hs = self.own_reachable_histories(s)
        return frozenset(t for t in self.strategies(s.player) if all(t[h] == s[h] for h in hs))

    def continuation_class(self, s: Strategy, h: Node) -> frozenset[Strategy]:
        """Strategies agreeing with s at every own node weakly following h."""
        hs = [g for g in self.player_nodes(s.player) if self.precedes(h, g)]
        return frozenset(t for t in self.strategies(s.player) if all(t[g] == s[g] for g in hs))

    def equivalence_classes(self, s: Strategy, at: Node | None = None) -> frozenset[Strategy]:
        return self.outcome_class(s) if at is None else self.continuation_class(s, at)

    def terminals_consistent_with(self, s: Strategy) -> frozenset[Node]:
        return frozenset(z for z in self.terminals if self.consistent_with_path(s, z))

    def iter_profiles(self) -> Iterator[dict[str, Strategy]]:
        for combo in product(*(self.strategies(p) for p in self.players)):
            yield {s.player: s for s in combo}


def validate_extensive_form(form: ExtensiveForm) -> list[str]:
    """Return a list of violations; empty when the form is well formed."""
    report: list[str] = []
    moves = form._moves
    if ROOT not in moves:
        return ["root: no active player at the initial history"]
    for h, p in form._undeclared:
        report.append(f"{h}: mover {p!r} is not a declared player")
    for p in form.players:
        if p.lower() in CHANCE_NAMES:
            report.append(f"player {p!r}: chance moves are not supported")
    reachable = set(form.nodes)
    for h in moves:
        if h not in reachable:
            report.append(f"{fmt_node(h)}: not reachable from the root through declared moves")
    for h in form.nodes:
        acts = moves[h]
        if not acts:
            report.append(f"{fmt_node(h)}: no active player")
        for p, a in acts.items():
            if len(a) < 2:
                report.append(f"{fmt_node(h)}: player {p} has fewer than two actions")
            if len(set(a)) != len(a):
                report.append(f"{fmt_node(h)}: player {p} has duplicate actions")
        if len(acts) == 1:
            (p,) = acts
            for m in form.moves_at(h):
                c = h + (m,)
                if not form.is_terminal(c) and set(moves[c]) == {p}:
                    report.append(f"{fmt_node(c)}: player {p} is the only active player twice in a row")
    return report


def centipede_form() -> ExtensiveForm:
    """Three-stage centipede: P1 D1/A1, P2 d/a, P1 D2/A2."""
    return ExtensiveForm(
        ("1", "2"),
        {
            (): {"1": ("D1", "A1")},
            ("A1",): {"2": ("d", "a")},
            ("A1", "a"): {"1": ("D2", "A2")},
        },
    )
