"""Independent brute-force oracle for justifiability.

It enumerates belief supports history by history (top down), derives the
supports the chain rule forces, and solves each induced linear system with
cddlib in exact rational arithmetic.  It shares no code with the kernel beyond the tree
and payoff primitives.
"""
from __future__ import annotations

from itertools import chain, combinations

from fractions import Fraction

import cdd


def _subsets(items):
    items = sorted(items)
    return chain.from_iterable(combinations(items, r) for r in range(1, len(items) + 1))


def _utility(frame, s, h, atom):
    form, ups = frame.form, frame.ups
    sp, t0, tp = atom
    prof = {q.player: q for q in sp}
    prof[frame.player] = s
    labels = {j: frame.types[t].payoff_type for j, t in zip(frame.opponents, tp)}
    labels[frame.player] = frame.payoff_type
    state = (t0, tuple(labels[p] for p in form.players))
    return ups.utility(frame.player, form.outcome(prof, h), state)


def _reaches(form, atom, h):
    return all(form.consistent_with_path(q, h) for q in atom[0])


def _max_slack(n, A, b, Aeq, beq):
    """max x[n-1] s.t. A x <= b, Aeq x = beq, x >= 0; -1 when infeasible."""
    rows = [[bi] + [-a for a in r] for bi, r in zip(b, A)]
    rows += [[0] + [1 if k == j else 0 for k in range(n)] for j in range(n)]
    eq = [[bi] + [-a for a in r] for bi, r in zip(beq, Aeq)]
    mat = cdd.Matrix(eq + rows, number_type="fraction")
    mat.lin_set = frozenset(range(len(eq)))
    mat.obj_type = cdd.LPObjType.MAX
    mat.obj_func = tuple([0] * n + [1])
    lp = cdd.LinProg(mat)
    lp.solve()
    if lp.status != cdd.LPStatusType.OPTIMAL:
        return -1
    return Fraction(lp.obj_value)


def oracle_justifiable(frame, s, allowed_by_history, strict=False) -> bool:
    """allowed_by_history: h -> set of atoms the belief at h may charge (already within reach)."""
    form = frame.form
    hs = sorted(frame.histories, key=len)
    atoms = list(frame.atoms)
    reach = {h: {a for a in atoms if _reaches(form, a, h)} for h in hs}
    prior = {k: Fraction(v) for k, v in frame.prior.items()}
    own = [h for h in hs if h in form.own_reachable_histories(s)]
    alts = [r for r in form.strategies(frame.player) if r != s]
    gains = {
        (h, r): {a: _utility(frame, s, h, a) - _utility(frame, r, h, a) for a in reach[h]}
        for h in own for r in alts
    }

    def assignments(k, supp, source):
        if k == len(hs):
            yield dict(supp), dict(source)
            return
        h = hs[k]
        preds = [g for g in hs[:k] if form.precedes(g, h) and supp[g] & reach[h]]
        if preds:
            g = min(preds, key=len)
            forced = supp[g] & reach[h]
            if forced <= allowed_by_history[h]:
                supp[h], source[h] = forced, source[g]
                yield from assignments(k + 1, supp, source)
            return
        pool = allowed_by_history[h]
        if h == ():
            pool = {a for a in pool if (a[1], a[2]) in prior}
        for sub in _subsets(pool):
            sub = set(sub)
            if h == () and {(a[1], a[2]) for a in sub} != set(prior):
                continue
            supp[h], source[h] = sub, h
            yield from assignments(k + 1, supp, source)

    for supp, source in assignments(0, {}, {}):
        roots = sorted({source[h] for h in hs}, key=len)
        var = {}
        for r in roots:
            for a in sorted(supp[r], key=repr):
                var[(r, a)] = len(var)
        t = len(var)
        n = t + 1
        A, b, Aeq, beq = [], [], [], []

        def row(coeffs, slack=0):
            out = [Fraction(0)] * n
            for key, c in coeffs.items():
                out[var[key]] += c
            out[t] = Fraction(slack)
            return out

        for r in roots:
            Aeq.append(row({(r, a): 1 for a in supp[r]}))
            beq.append(1)
            for a in supp[r]:
                A.append(row({(r, a): -1}, 1))  # t - x <= 0
                b.append(0)
        for key, p in prior.items():
            Aeq.append(row({((), a): 1 for a in supp[()] if (a[1], a[2]) == key}))
            beq.append(p)
        for h in own:
            r = source[h]
            for alt in alts:
                coeffs = {(r, a): gains[(h, alt)][a] for a in supp[h]}
                tight = strict and alt[h] != s[h]
                A.append([-c for c in row(coeffs, -1 if tight else 0)])  # -(gain) + t <= 0
                b.append(0)
        A.append(row({}, 1))
        b.append(1)
        if _max_slack(n, A, b, Aeq, beq) > 0:
            return True
    return False
