"""Exact decision procedure for the existence of a justifying CPS.

A regime fixes which conditioning histories are updated from scratch.  Given
a regime, each non-scratch belief is the normalised restriction of its
deepest scratch ancestor, so every requirement becomes linear in the
scratch beliefs.  Strictness is handled with a common slack variable that
is maximised and must be positive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterator, Mapping

from .conjectures import ConditionalProbabilitySystem, Frame
from .forms import ROOT, Node, Strategy
from .lp import OPTIMAL, LinearProgram

WEAK, STRICT = "weak", "strict"
FREE, PROB1, SUPPORT_IN = "free", "prob1", "support_in"


@dataclass(frozen=True)
class Restriction:
    kind: str  # FREE | PROB1 | SUPPORT_IN
    allowed: frozenset = frozenset()  # atom indices


@dataclass
class RestrictionSpec:
    """Per-history support restrictions; histories not listed are free."""

    by_history: dict = field(default_factory=dict)

    def allowed(self, frame: Frame, h: Node) -> frozenset[int]:
        r = self.by_history.get(h)
        base = frame.reach[h]
        if r is None or r.kind == FREE:
            return base
        return base & r.allowed

    @classmethod
    def free(cls) -> "RestrictionSpec":
        return cls({})


def _regimes(frame: Frame) -> Iterator[dict[Node, bool]]:
    rest = [h for h in frame.histories if h != ROOT]
    for bits in product((False, True), repeat=len(rest)):
        yield dict(zip(rest, bits))


def _parent(frame: Frame, h: Node, scratch: Mapping[Node, bool]) -> Node:
    best = ROOT
    for g in frame.histories:
        if g != h and len(g) < len(h) and h[: len(g)] == g and (g == ROOT or scratch[g]):
            if len(g) >= len(best):
                best = g
    return best


def justifiable(
    frame: Frame,
    s: Strategy,
    restrictions: RestrictionSpec | None = None,
    mode: str = WEAK,
    optimal_at: str = "own",
) -> ConditionalProbabilitySystem | None:
    """Return a CPS under which s is a sequential best response, or None.

    ``mode='strict'`` additionally requires every strategy outside s's
    outcome class to be strictly worse at some history it reaches.
    ``optimal_at='all'`` asks for optimality at every own history rather
    than only at those s reaches.
    """
    restrictions = restrictions or RestrictionSpec.free()
    form = frame.form
    allowed = {h: restrictions.allowed(frame, h) for h in frame.histories}
    own = list(form.own_reachable_histories(s)) if optimal_at == "own" else list(form.player_nodes(frame.player))
    own.sort(key=len)
    strict_at = list(form.own_reachable_histories(s)) if mode == STRICT else []
    groups = frame.prior_atoms()
    for key, p in frame.prior.items():
        if key not in groups:
            return None

    for scratch in _regimes(frame):
        roots = [ROOT] + [h for h, b in scratch.items() if b]
        parent = {h: _parent(frame, h, scratch) for h in frame.histories if h != ROOT}
        domain = {r: set(allowed[r]) for r in roots}
        feasible = True
        for h in frame.histories:
            if h == ROOT:
                continue
            r = parent[h]
            if scratch[h]:
                domain[r] -= frame.reach[h]
            else:
                domain[r] -= frame.reach[h] - allowed[h]
        for r in roots:
            if not domain[r]:
                feasible = False
        if not feasible:
            continue
        if any(not any(k in domain[ROOT] for k in groups[key]) for key in frame.prior):
            continue
        positive = [h for h in frame.histories if h != ROOT and not scratch[h]]
        if any(not (domain[parent[h]] & frame.reach[h]) for h in positive):
            continue

        lp = LinearProgram()
        t = lp.var("t")
        lp.le({t: 1}, 1)
        for r in roots:
            lp.eq({("x", r, k): 1 for k in domain[r]}, 1)
        for key, idx in groups.items():
            lp.eq({("x", ROOT, k): 1 for k in idx if k in domain[ROOT]}, frame.prior.get(key, 0))
        for h in positive:
            r = parent[h]
            lp.ge({**{("x", r, k): 1 for k in domain[r] & frame.reach[h]}, t: -1}, 0)

        def belief_owner(h):
            return h if h == ROOT or scratch[h] else parent[h]

        rows_seen = set()
        for h in own:
            r = belief_owner(h)
            atoms = sorted(domain[r] & frame.reach[h])
            mine = frame.utilities(s, h)
            strict_here = h in strict_at
            for alt in frame.strategies:
                if alt == s:
                    continue
                theirs = frame.utilities(alt, h)
                coeffs = tuple((k, mine[k] - theirs[k]) for k in atoms if mine[k] != theirs[k])
                is_strict = strict_here and alt[h] != s[h]
                if not coeffs:
                    if is_strict:
                        feasible = False
                        break
                    continue
                sig = (r, coeffs, is_strict)
                if sig in rows_seen:
                    continue
                rows_seen.add(sig)
                row = {("x", r, k): c for k, c in coeffs}
                if is_strict:
                    row[t] = -1
                lp.ge(row, 0)
            if not feasible:
                break
        if not feasible:
            continue
        res = lp.maximize({t: 1})
        if res.status != OPTIMAL or res.value <= 0:
            continue
        return _witness(frame, res.x, roots, parent, domain, scratch)
    return None


def _witness(frame: Frame, x, roots, parent, domain, scratch) -> ConditionalProbabilitySystem:
    beliefs: dict = {}
    for r in roots:
        beliefs[r] = {frame.atoms[k]: x.get(("x", r, k), Fraction(0)) for k in domain[r]}
    for h in frame.histories:
        if h == ROOT or scratch[h]:
            continue
        r = parent[h]
        sub = {k: x.get(("x", r, k), Fraction(0)) for k in domain[r] & frame.reach[h]}
        m = sum(sub.values(), Fraction(0))
        beliefs[h] = {frame.atoms[k]: v / m for k, v in sub.items()}
    return ConditionalProbabilitySystem.of(frame.player, beliefs)


def ex_ante_justifiable(frame: Frame, s: Strategy, allowed: frozenset[int] | None = None) -> dict | None:
    """Initial belief (marginal fixed by the type) making s optimal at h0 among all plans."""
    dom = set(range(len(frame.atoms)) if allowed is None else allowed)
    groups = frame.prior_atoms()
    for key in frame.prior:
        if key not in groups or not any(k in dom for k in groups[key]):
            return None
    lp = LinearProgram()
    for key, idx in groups.items():
        lp.eq({("x", k): 1 for k in idx if k in dom}, frame.prior.get(key, 0))
    for k in dom:
        lp.var(("x", k))
    mine = frame.utilities(s, ROOT)
    seen = set()
    for alt in frame.strategies:
        theirs = frame.utilities(alt, ROOT)
        coeffs = tuple((k, mine[k] - theirs[k]) for k in sorted(dom) if mine[k] != theirs[k])
        if coeffs and coeffs not in seen:
            seen.add(coeffs)
            lp.ge({("x", k): c for k, c in coeffs}, 0)
    res = lp.maximize({})
    if res.status != OPTIMAL:
        return None
    return {frame.atoms[k]: res.x.get(("x", k), Fraction(0)) for k in sorted(dom) if res.x.get(("x", k))}
