"""Exact feasibility of mixed strict / non-strict linear systems.

Two independent routes decide the same question:

* :func:`feasible_mixed` -- two-phase simplex over :class:`Fraction` with
  Bland's rule, maximizing a common slack ``delta`` on the strict rows.
* :func:`fm_oracle` -- Fourier-Motzkin elimination carrying a strictness
  flag on every derived row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Optional, Sequence

from .errors import TooManyVariables

GE = "ge"
GT = "gt"
EQ = "eq"
RELATIONS = (GE, GT, EQ)

ZERO = Fraction(0)
ONE = Fraction(1)

FM_MAX_VARIABLES = 8


@dataclass(frozen=True)
class Row:
    coeffs: Mapping[Hashable, Fraction]
    rel: str
    rhs: Fraction

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")
        object.__setattr__(self, "rhs", Fraction(self.rhs))
        object.__setattr__(
            self, "coeffs", {v: Fraction(c) for v, c in self.coeffs.items() if c != 0}
        )

    def lhs(self, x: Mapping) -> Fraction:
        return sum((c * x.get(v, ZERO) for v, c in self.coeffs.items()), ZERO)

    def holds(self, x: Mapping) -> bool:
        value = self.lhs(x)
        if self.rel == GE:
            return value >= self.rhs
        if self.rel == GT:
            return value > self.rhs
        return value == self.rhs


@dataclass(frozen=True)
class LinearSystem:
    variables: tuple
    rows: tuple
    nonneg: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rows", tuple(self.rows))
        declared = set(self.variables)
        for row in self.rows:
            unknown = set(row.coeffs) - declared
            if unknown:
                raise ValueError(f"undeclared variables in row: {sorted(map(str, unknown))}")

    @property
    def has_strict(self) -> bool:
        return any(r.rel == GT for r in self.rows)

    def to_json(self) -> dict:
        return {
            "variables": [str(v) for v in self.variables],
            "nonneg": self.nonneg,
            "rows": [
                {
                    "coeffs": {str(v): _rat_str(c) for v, c in r.coeffs.items()},
                    "rel": r.rel,
                    "rhs": _rat_str(r.rhs),
                }
                for r in self.rows
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data: dict) -> "LinearSystem":
        rows = [
            Row({v: Fraction(c) for v, c in r["coeffs"].items()}, r["rel"], Fraction(r["rhs"]))
            for r in data["rows"]
        ]
        return cls(tuple(data["variables"]), tuple(rows), data.get("nonneg", True))


def _rat_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def check_witness(sys: LinearSystem, x: Mapping) -> bool:
    """Row-by-row substitution check, strictness and sign included."""
    if set(x) - set(sys.variables):
        return False
    if sys.nonneg and any(x.get(v, ZERO) < 0 for v in sys.variables):
        return False
    return all(row.holds(x) for row in sys.rows)


# -- simplex core ----------------------------------------------------------

class _Unbounded(Exception):
    pass


def _pivot(tab, cost, basis, r, j):
    row = tab[r]
    p = row[j]
    if p != 1:
        row[:] = [a / p for a in row]
    nz = [(k, a) for k, a in enumerate(row) if a]
    for other in tab:
        if other is not row:
            f = other[j]
            if f:
                for k, a in nz:
                    other[k] -= f * a
    f = cost[j]
    if f:
        for k, a in nz:
            cost[k] -= f * a
    basis[r] = j


def _run(tab, cost, basis, allowed):
    """Maximize with Bland's rule; ``cost`` holds reduced costs."""
    rhs = len(cost) - 1
    while True:
        entering = next((j for j in allowed if cost[j] > 0), None)
        if entering is None:
            return
        best = None
        for r, row in enumerate(tab):
            a = row[entering]
            if a > 0:
                ratio = row[rhs] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                    best = (ratio, r)
        if best is None:
            raise _Unbounded()
        _pivot(tab, cost, basis, best[1], entering)


def _reduced_cost(tab, basis, c):
    cost = list(c) + [ZERO]
    for r, row in enumerate(tab):
        cb = cost[basis[r]]
        if cb:
            for k, a in enumerate(row):
                if a:
                    cost[k] -= cb * a
    return cost


def _solve_standard(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]):
    """max c.x  s.t.  A x = b, x >= 0.

    Returns ``(value, x)`` or ``None`` if infeasible.  Raises
    :class:`_Unbounded` if the objective is unbounded.
    """
    m, n = len(A), len(c)
    tab = []
    for i in range(m):
        row = [Fraction(a) for a in A[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-a for a in row]
            rhs = -rhs
        art = [ZERO] * m
        art[i] = ONE
        tab.append(row + art + [rhs])
    basis = [n + i for i in range(m)]
    total = n + m
    phase1 = [ZERO] * n + [-ONE] * m
    cost = _reduced_cost(tab, basis, phase1)
    _run(tab, cost, basis, range(total))
    if cost[total] != 0:  # -(phase-1 optimum) = sum of artificials
        return None
    # drive artificials out of the basis, dropping redundant rows
    r = 0
    while r < len(tab):
        if basis[r] >= n:
            j = next((j for j in range(n) if tab[r][j] != 0), None)
            if j is None:
                del tab[r]
                del basis[r]
                continue
            _pivot(tab, cost, basis, r, j)
        r += 1
    for row in tab:
        del row[n:total]
    cost = _reduced_cost(tab, basis, list(c))
    _run(tab, cost, basis, range(n))
    x = [ZERO] * n
    for r, j in enumerate(basis):
        x[j] = tab[r][-1]
    value = sum((cj * xj for cj, xj in zip(c, x)), ZERO)
    return value, x


# -- translation -----------------------------------------------------------

def _merge_columns(sys: LinearSystem):
    """Group nonnegative variables whose coefficient columns coincide.

    Feasibility is unchanged: mass on a merged column can be split over its
    members in any proportion.
    """
    if not sys.nonneg:
        return None
    groups = {}
    for v in sys.variables:
        key = tuple(row.coeffs.get(v, ZERO) for row in sys.rows)
        groups.setdefault(key, []).append(v)
    if len(groups) == len(sys.variables):
        return None
    reps = []
    members = {}
    for key, vs in groups.items():
        rep = ("merged", len(reps))
        reps.append(rep)
        members[rep] = vs
    rows = []
    for k, row in enumerate(sys.rows):
        coeffs = {rep: key[k] for rep, key in zip(reps, groups) if key[k]}
        rows.append(Row(coeffs, row.rel, row.rhs))
    return LinearSystem(tuple(reps), tuple(rows), True), members


def _expand(x: dict, members: dict) -> dict:
    out = {}
    for rep, vs in members.items():
        share = x.get(rep, ZERO) / len(vs)
        for v in vs:
            out[v] = share
    return out


def _standard_form(sys: LinearSystem, with_delta: bool):
    """Columns: [x (split if free)] [slacks] [delta]; returns A, b and a
    decoder from the standard solution back to the variables."""
    cols = []
    for v in sys.variables:
        cols.append((v, ONE))
        if not sys.nonneg:
            cols.append((v, -ONE))
    nx = len(cols)
    ineq = [k for k, r in enumerate(sys.rows) if r.rel != EQ]
    strict = [k for k, r in enumerate(sys.rows) if r.rel == GT]
    use_delta = with_delta and bool(strict)
    n = nx + len(ineq) + (2 if use_delta else 0)
    delta = nx + len(ineq)
    A, b = [], []
    for k, row in enumerate(sys.rows):
        line = [ZERO] * n
        for j, (v, sign) in enumerate(cols):
            c = row.coeffs.get(v)
            if c:
                line[j] = sign * c
        if row.rel != EQ:
            line[nx + ineq.index(k)] = -ONE
        if use_delta and row.rel == GT:
            line[delta] = -ONE
        A.append(line)
        b.append(row.rhs)
    if use_delta:
        line = [ZERO] * n
        line[delta] = ONE
        line[delta + 1] = ONE  # delta + s = 1 caps the slack
        A.append(line)
        b.append(ONE)

    def decode(z):
        x = {v: ZERO for v in sys.variables}
        for j, (v, sign) in enumerate(cols):
            x[v] += sign * z[j]
        return x

    return A, b, n, (delta if use_delta else None), decode


def _closed(sys: LinearSystem) -> Optional[dict]:
    A, b, n, _, decode = _standard_form(sys, with_delta=False)
    if not A:
        return {v: ZERO for v in sys.variables}
    res = _solve_standard(A, b, [ZERO] * n)
    return None if res is None else decode(res[1])


def _max_delta(sys: LinearSystem):
    A, b, n, delta, decode = _standard_form(sys, with_delta=True)
    c = [ZERO] * n
    c[delta] = ONE
    res = _solve_standard(A, b, c)
    if res is None:
        return None
    return res[0], decode(res[1])


# -- public API ------------------------------------------------------------

def feasible_closed(sys: LinearSystem) -> Optional[dict]:
    """A witness of the closed relaxation (strict rows read as ``>=``)."""
    merged = _merge_columns(sys)
    if merged:
        x = _closed(merged[0])
        return None if x is None else _expand(x, merged[1])
    return _closed(sys)


def max_slack(sys: LinearSystem):
    """Optimal common slack on the strict rows, capped at 1.

    Returns ``(delta, x)`` or ``None`` when the closed relaxation is
    infeasible.  Systems without strict rows report ``delta = 1``.
    """
    if not sys.has_strict:
        x = feasible_closed(sys)
        return None if x is None else (ONE, x)
    merged = _merge_columns(sys)
    if merged:
        res = _max_delta(merged[0])
        return None if res is None else (res[0], _expand(res[1], merged[1]))
    return _max_delta(sys)


def feasible_mixed(sys: LinearSystem) -> Optional[dict]:
    """A witness satisfying every strict row strictly, or ``None``."""
    res = max_slack(sys)
    if res is None or res[0] <= 0:
        return None
    return res[1]


def fm_oracle(sys: LinearSystem) -> bool:
    """Decide mixed feasibility by Fourier-Motzkin elimination."""
    variables = list(sys.variables)
    if len(variables) > FM_MAX_VARIABLES:
        raise TooManyVariables(
            f"{len(variables)} variables exceeds the oracle limit of {FM_MAX_VARIABLES}"
        )
    n = len(variables)
    # coefficients -> (rhs, strict), meaning a.x >= rhs (or >); only the
    # strongest row per direction is kept
    rows = {}

    def add(coeffs, rhs, strict):
        coeffs, rhs, strict = _normalize(tuple(coeffs), rhs, strict)
        old = rows.get(coeffs)
        if old is None or (rhs, strict) > old:
            rows[coeffs] = (rhs, strict)

    for row in sys.rows:
        a = [row.coeffs.get(v, ZERO) for v in variables]
        add(a, row.rhs, row.rel == GT)
        if row.rel == EQ:
            add([-c for c in a], -row.rhs, False)
    if sys.nonneg:
        for j in range(n):
            add([ONE if k == j else ZERO for k in range(n)], ZERO, False)

    remaining = set(range(n))
    while True:
        zero = tuple([ZERO] * n)
        if zero in rows:
            rhs, strict = rows.pop(zero)
            if (strict and not rhs < 0) or (not strict and rhs > 0):
                return False
        if not remaining:
            return True
        # cheapest variable first
        j = min(
            remaining,
            key=lambda k: sum(1 for a in rows if a[k] > 0) * sum(1 for a in rows if a[k] < 0),
        )
        remaining.discard(j)
        pos = [(a, r) for a, r in rows.items() if a[j] > 0]
        neg = [(a, r) for a, r in rows.items() if a[j] < 0]
        rows = {a: r for a, r in rows.items() if a[j] == 0}
        for pa, (pb, ps) in pos:
            for na, (nb, ns) in neg:
                lp, ln = -na[j], pa[j]  # positive multipliers cancelling x_j
                add((lp * x + ln * y for x, y in zip(pa, na)), lp * pb + ln * nb, ps or ns)


def _normalize(coeffs, rhs, strict):
    scale = max((abs(c) for c in coeffs), default=ZERO)
    if scale:
        coeffs = tuple(c / scale for c in coeffs)
        rhs = rhs / scale
    return coeffs, rhs, strict
