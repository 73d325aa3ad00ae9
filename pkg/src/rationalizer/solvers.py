"""Iterated solution concepts over profiles of subjective models.

Every solver works on the closure of the profile under ascription: a node
is a (subjective structure, player) pair, and round k+1 at a node uses the
round-k sets computed at the nodes its structure ascribes to opponents.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

from .conjectures import Frame
from .epistemic import SubjectiveModel, SubjectivePayoffStructure, TypeStructure, consistent_types
from .forms import ROOT, ExtensiveForm, HistorySet, Node, Strategy
from .kernel import PROB1, STRICT, SUPPORT_IN, WEAK, Restriction, RestrictionSpec, ex_ante_justifiable, justifiable

EFR, BR, SEFR, ICR = "efr", "br", "sefr", "icr"
CONCEPTS = (EFR, BR, SEFR, ICR)


class BudgetExceeded(RuntimeError):
    def __init__(self, trace: "SolutionTrace"):
        super().__init__(f"{trace.concept}: no fixpoint within {len(trace.rounds) - 1} rounds")
        self.trace = trace


@dataclass
class Node_:
    key: tuple
    name: str
    structure: SubjectivePayoffStructure
    player: str
    types: TypeStructure
    type_labels: tuple
    opponents: dict  # opponent -> node key


@dataclass
class SolutionTrace:
    concept: str
    nodes: dict  # key -> Node_
    roots: list  # node keys, one per root model, in profile order
    root_types: list
    rounds: list = field(default_factory=list)  # list of {(node key, type): frozenset}
    witnesses: dict = field(default_factory=dict)  # (round, node key, type, strategy) -> CPS or belief
    fixpoint: int | None = None
    form: ExtensiveForm | None = None

    def at(self, k: int, player_index: int) -> frozenset[Strategy]:
        return self.rounds[k][(self.roots[player_index], self.root_types[player_index])]

    def final(self, player_index: int) -> frozenset[Strategy]:
        return self.at(len(self.rounds) - 1, player_index)

    def final_by_player(self) -> dict[str, frozenset[Strategy]]:
        return {self.nodes[r].player: self.final(k) for k, r in enumerate(self.roots)}

    def node_sets(self, k: int, key) -> dict[str, frozenset[Strategy]]:
        return {t: v for (n, t), v in self.rounds[k].items() if n == key}

    def outcomes(self, k: int | None = None) -> frozenset[Node]:
        k = len(self.rounds) - 1 if k is None else k
        sets = [self.at(k, i) for i in range(len(self.roots))]
        return frozenset(self.form.outcome(list(combo)) for combo in product(*sets))


def _closure(models: Sequence[SubjectiveModel]) -> tuple[dict, list]:
    nodes: dict = {}
    roots = []
    queue: list = []

    def key_of(d, p, ts):
        return (d, p, id(ts))

    for m in models:
        k = key_of(m.structure, m.player, m.types)
        roots.append(k)
        if k not in nodes:
            nodes[k] = None
            queue.append((k, m.structure, m.player, m.types, m.player))
    while queue:
        k, d, p, ts, name = queue.pop(0)
        opp = {}
        for j in ts.opponents(p):
            dj = d.ascribed(j)
            kj = key_of(dj, j, ts)
            opp[j] = kj
            if kj not in nodes:
                nodes[kj] = None
                queue.append((kj, dj, j, ts, f"{name}>{j}"))
        labels = tuple(sorted(consistent_types(d, ts, p)))
        nodes[k] = Node_(k, name, d, p, ts, labels, opp)
    return nodes, roots


def _threads(threads: int | None) -> int:
    env = os.environ.get("RATIONALIZER_THREADS")
    if env:
        return max(1, int(env))
    return max(1, threads or 1)


class _Solver:
    def __init__(self, models: Sequence[SubjectiveModel], concept: str, max_rounds: int | None, threads: int | None):
        for m in models:
            if m.root not in m.types or m.root not in consistent_types(m.structure, m.types, m.player):
                raise ValueError(f"root type {m.root} of player {m.player} is not consistent with its structure")
        self.models = list(models)
        self.concept = concept
        self.nodes, self.roots = _closure(models)
        self.form = models[0].structure.level1.form
        if max_rounds is None:
            # every non-final round removes at least one (node, type, strategy) triple
            max_rounds = 1 + sum(len(self.form.strategies(n.player)) * len(n.type_labels) for n in self.nodes.values())
        self.max_rounds = max_rounds
        self.threads = _threads(threads)
        self.frames: dict = {}

    def frame(self, key, t) -> Frame:
        if (key, t) not in self.frames:
            node = self.nodes[key]
            spec = node.types[t]
            opp = {j: self.nodes[kj].type_labels for j, kj in node.opponents.items()}
            self.frames[(key, t)] = Frame(node.structure.level1, node.player, spec.payoff_type, node.types, opp, spec.belief_map())
        return self.frames[(key, t)]

    def tasks(self):
        for key in sorted(self.nodes, key=lambda k: self.nodes[k].name):
            node = self.nodes[key]
            for t in node.type_labels:
                yield key, t

    def graph_atoms(self, frame: Frame, key, sets: Mapping) -> frozenset[int]:
        node = self.nodes[key]
        out = []
        for k, (sp, t0, tp) in enumerate(frame.atoms):
            if all(s in sets[(node.opponents[j], tj)] for j, s, tj in zip(frame.opponents, sp, tp)):
                out.append(k)
        return frozenset(out)

    def run(self) -> SolutionTrace:
        trace = SolutionTrace(
            self.concept, self.nodes, self.roots, [m.root for m in self.models], form=self.form
        )
        full = {(k, t): frozenset(self.form.strategies(self.nodes[k].player)) for k, t in self.tasks()}
        trace.rounds.append(full)
        history = [full]  # per-round sets used for restrictions
        aux = [full]  # continuation-optimal sets (backward concept only)
        for k in range(self.max_rounds):
            jobs = [(key, t, s) for key, t in self.tasks() for s in self.form.strategies(self.nodes[key].player)]
            specs = {(key, t): self.restrictions(key, t, history, aux) for key, t in self.tasks()}
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(lambda job: self.check(job, specs[(job[0], job[1])]), jobs))
            nxt: dict = {kt: set() for kt in full}
            nxt_aux: dict = {kt: set() for kt in full}
            for (key, t, s), (ok, ok_all, wit) in zip(jobs, results):
                if ok:
                    nxt[(key, t)].add(s)
                    trace.witnesses[(k + 1, key, t, s)] = wit
                if ok_all:
                    nxt_aux[(key, t)].add(s)
            nxt = {kt: frozenset(v) for kt, v in nxt.items()}
            trace.rounds.append(nxt)
            history.append(nxt)
            aux.append({kt: frozenset(v) for kt, v in nxt_aux.items()})
            if nxt == history[-2] and (self.concept != BR or aux[-1] == aux[-2]):
                trace.fixpoint = k + 1
                return trace
        raise BudgetExceeded(trace)

    # -- per concept -----------------------------------------------------------
    def restrictions(self, key, t, history, aux):
        fr = self.frame(key, t)
        spec = RestrictionSpec({})
        if self.concept in (EFR, SEFR):
            graphs = [self.graph_atoms(fr, key, sets) for sets in history]
            for h in fr.histories:
                for g in reversed(graphs):
                    if g & fr.reach[h]:
                        spec.by_history[h] = Restriction(PROB1, g)
                        break
        elif self.concept == BR:
            sets = aux[-1]
            node = self.nodes[key]
            for h in fr.histories:
                ok = []
                for k, (sp, t0, tp) in enumerate(fr.atoms):
                    if all(
                        self.form.continuation_class(s, h) & sets[(node.opponents[j], tj)]
                        for j, s, tj in zip(fr.opponents, sp, tp)
                    ):
                        ok.append(k)
                spec.by_history[h] = Restriction(SUPPORT_IN, frozenset(ok))
        elif self.concept == ICR:
            spec.by_history[ROOT] = Restriction(PROB1, self.graph_atoms(fr, key, history[-1]))
        return spec

    def check(self, job, spec):
        key, t, s = job
        fr = self.frame(key, t)
        if self.concept == ICR:
            wit = ex_ante_justifiable(fr, s, spec.allowed(fr, ROOT))
            return wit is not None, False, wit
        mode = STRICT if self.concept == SEFR else WEAK
        wit = justifiable(fr, s, spec, mode)
        ok_all = False
        if self.concept == BR and wit is not None:
            ok_all = justifiable(fr, s, spec, WEAK, optimal_at="all") is not None
        return wit is not None, ok_all, wit


def solve(models: Sequence[SubjectiveModel], concept: str = EFR, max_rounds: int | None = None, threads: int | None = None) -> SolutionTrace:
    if concept not in CONCEPTS:
        raise ValueError(f"unknown concept {concept!r}")
    return _Solver(models, concept, max_rounds, threads).run()


def efr(models, max_rounds=None, threads=None) -> SolutionTrace:
    return solve(models, EFR, max_rounds, threads)


def backward(models, max_rounds=None, threads=None) -> SolutionTrace:
    return solve(models, BR, max_rounds, threads)


def strict_efr(models, max_rounds=None, threads=None) -> SolutionTrace:
    return solve(models, SEFR, max_rounds, threads)


def icr(models, max_rounds=None, threads=None) -> SolutionTrace:
    return solve(models, ICR, max_rounds, threads)


def efr_outcomes(models, **kw) -> frozenset[Node]:
    return efr(models, **kw).outcomes()


def br_outcomes(models, **kw) -> frozenset[Node]:
    return backward(models, **kw).outcomes()


def reachable_under(form: ExtensiveForm, correspondence: Mapping[tuple, Iterable[Strategy]], observer: str) -> HistorySet:
    """Histories in H_i ∪ {h0} reached by some opponent profile in the correspondence graph.

    ``correspondence`` maps (player, type) to a strategy set for the observer's opponents.
    """
    by_player: dict = {}
    for (p, t), sets in correspondence.items():
        if p != observer:
            by_player.setdefault(p, []).append(frozenset(sets))
    opp = form.opponents(observer)
    hs = (ROOT,) + tuple(h for h in form.player_nodes(observer) if h != ROOT)
    out = []
    for h in hs:
        if all(
            any(S & form.reaching_strategies(h, j) for S in by_player.get(j, [])) for j in opp
        ):
            out.append(h)
    return HistorySet(out, tag="H_i(W)")


def ascribed_sets(trace: SolutionTrace, k: int, root_index: int, opponent: str) -> dict:
    """Round-k sets of the node the root model ascribes to ``opponent``, keyed (player, type)."""
    node = trace.nodes[trace.roots[root_index]]
    kj = node.opponents[opponent]
    return {(opponent, t): v for t, v in trace.node_sets(k, kj).items()}
