"""Exact two-phase simplex over Fractions with Bland's anti-cycling rule.

All variables are non-negative.  Constraints are added as sparse
``{var: coeff}`` dictionaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"
_ZERO = Fraction(0)


@dataclass
class LPResult:
    status: str
    value: Fraction | None = None
    x: dict = field(default_factory=dict)


class LinearProgram:
    def __init__(self):
        self._vars: dict[Hashable, int] = {}
        self._rows: list[tuple[dict[int, Fraction], str, Fraction]] = []

    def var(self, name: Hashable) -> Hashable:
        if name not in self._vars:
            self._vars[name] = len(self._vars)
        return name

    def _row(self, coeffs: Mapping, sense: str, rhs):
        row: dict[int, Fraction] = {}
        for v, c in coeffs.items():
            c = Fraction(c)
            if c:
                j = self._vars[self.var(v)]
                row[j] = row.get(j, _ZERO) + c
        self._rows.append((row, sense, Fraction(rhs)))

    def le(self, coeffs: Mapping, rhs=0):
        self._row(coeffs, "<=", rhs)

    def ge(self, coeffs: Mapping, rhs=0):
        self._row(coeffs, ">=", rhs)

    def eq(self, coeffs: Mapping, rhs=0):
        self._row(coeffs, "==", rhs)

    def maximize(self, objective: Mapping | None = None) -> LPResult:
        names = list(self._vars)
        obj = {self._vars[self.var(v)]: Fraction(c) for v, c in (objective or {}).items()}
        n = len(self._vars)
        rows = []
        for row, sense, rhs in self._rows:
            if sense == ">=":
                row, rhs = {j: -c for j, c in row.items()}, -rhs
                sense = "<="
            rows.append((row, sense, rhs))
        status, value, x = _solve(n, rows, obj)
        if status != OPTIMAL:
            return LPResult(status)
        return LPResult(status, value, {names[j]: x[j] for j in range(n)})


def _pivot(T: list[list[Fraction]], obj: list[Fraction], basis: list[int], r: int, c: int):
    prow = T[r]
    inv = 1 / prow[c]
    if inv != 1:
        for k, v in enumerate(prow):
            if v:
                prow[k] = v * inv
    nz = [(k, v) for k, v in enumerate(prow) if v]
    for i, row in enumerate(T):
        if i != r:
            f = row[c]
            if f:
                for k, v in nz:
                    row[k] -= f * v
    f = obj[c]
    if f:
        for k, v in nz:
            obj[k] -= f * v
    basis[r] = c


def _run(T, obj, basis, allowed: int) -> str:
    """Maximize; ``obj`` holds reduced costs (negative means improving)."""
    while True:
        enter = next((j for j in range(allowed) if obj[j] < 0), None)
        if enter is None:
            return OPTIMAL
        best, leave = None, None
        for i, row in enumerate(T):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return UNBOUNDED
        _pivot(T, obj, basis, leave, enter)


def _solve(n: int, rows, obj: dict[int, Fraction]):
    n_slack = sum(1 for _, s, _ in rows if s == "<=")
    m = len(rows)
    width = n + n_slack + m  # structural, slack, artificial
    T: list[list[Fraction]] = []
    basis: list[int] = []
    s_idx = n
    for i, (row, sense, rhs) in enumerate(rows):
        line = [_ZERO] * (width + 1)
        for j, c in row.items():
            line[j] = c
        if sense == "<=":
            line[s_idx] = Fraction(1)
            s_idx += 1
        line[-1] = rhs
        if rhs < 0:
            line = [-v for v in line]
        line[n + n_slack + i] = Fraction(1)
        T.append(line)
        basis.append(n + n_slack + i)
    # phase 1: maximize -sum(artificials)
    p1 = [_ZERO] * (width + 1)
    for j in range(n + n_slack, width):
        p1[j] = Fraction(1)
    for row in T:
        for k in range(width + 1):
            if row[k]:
                p1[k] -= row[k]
    _run(T, p1, basis, n + n_slack)
    if p1[-1] != 0:
        return INFEASIBLE, None, None
    # drive artificials out of the basis
    real = n + n_slack
    keep = []
    for i in range(len(T)):
        if basis[i] >= real:
            col = next((j for j in range(real) if T[i][j] != 0), None)
            if col is None:
                continue
            _pivot(T, p1, basis, i, col)
        keep.append(i)
    T = [T[i] for i in keep]
    basis = [basis[i] for i in keep]
    for row in T:
        for j in range(real, width):
            row[j] = _ZERO
    # phase 2
    ob = [_ZERO] * (width + 1)
    for j, c in obj.items():
        ob[j] = -c
    for i, b in enumerate(basis):
        f = ob[b]
        if f:
            row = T[i]
            for k in range(width + 1):
                if row[k]:
                    ob[k] -= f * row[k]
    status = _run(T, ob, basis, real)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None
    x = [_ZERO] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = T[i][-1]
    return OPTIMAL, ob[-1], x
