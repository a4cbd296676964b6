"""Types over a finite closure and their iterative elimination.

A type is a saturated subset of the closure, stored as a bitmask over
``closure.formulas``.  Candidate types are the *coherent* ones: the
Boolean skeleton is respected, the equalities form an equivalence relation
on the closure's terms, and every literal instance of K-monotonicity,
K-exclusion, K-zero and Kv-monotonicity internal to the closure holds.

Each surviving type is checked against a family of exact linear systems
(one per agent), whose variables ``z[(mask, f)]`` distribute an agent's
probability over (type, assignment) pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional

from .errors import ClosureTooLarge, FormulaNotInClosure, TooFewCoordinates
from .lp import EQ, GE, GT, LinearSystem, Row, feasible_mixed
from .syntax import Atom, Closure, Eq, Formula, Imp, K, Kv, Not, conj_all, to_text

DEFAULT_CLOSURE_CAP = 40
DEFAULT_TYPE_CAP = 2 ** 20

TERM_COUNT = "paper"  # one coordinate per term
PLUS_ONE = "plus_one"


def resolve_k_size(policy, closure: Closure) -> int:
    """Number of value coordinates for ``policy`` (``"paper"``,
    ``"plus_one"`` or an explicit positive integer)."""
    n = len(closure.terms)
    if policy in (None, PLUS_ONE, "plus-one"):
        return n + 1
    if policy == TERM_COUNT:
        return n
    size = int(policy)
    if size < 1:
        raise ValueError("explicit coordinate count must be >= 1")
    return size


@dataclass(frozen=True, eq=False)
class TypeCandidate:
    closure: Closure = field(repr=False)
    mask: int

    def __eq__(self, other):
        return (
            isinstance(other, TypeCandidate)
            and self.mask == other.mask
            and self.closure is other.closure
        )

    def __hash__(self):
        return hash(self.mask)

    def __contains__(self, f: Formula) -> bool:
        k = self.closure.index.get(f)
        return k is not None and bool(self.mask >> k & 1)

    @property
    def members(self) -> tuple:
        return tuple(f for k, f in enumerate(self.closure.formulas) if self.mask >> k & 1)

    def labels(self) -> list:
        return [to_text(f) for f in self.members]

    @cached_property
    def classes(self) -> tuple:
        """Equality classes of the closure's terms, ordered by first term."""
        out = []
        for t in self.closure.terms:
            for cls in out:
                if Eq(cls[0], t) in self:
                    cls.append(t)
                    break
            else:
                out.append([t])
        return tuple(tuple(c) for c in out)


# -- enumeration -------------------------------------------------------------

def _partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def _bell(n):
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def _modal_constraints(modals):
    """Literal instances of KMon, KvMon, KZero and KExcl among ``modals``.

    Returns (implies, forced, excludes) over positions in ``modals``.
    """
    implies, forced, excludes = [], [], []
    for a, f in enumerate(modals):
        if isinstance(f, K) and f.theta == 0:
            forced.append(a)
        for b, g in enumerate(modals):
            if a == b or type(f) is not type(g) or f.agent != g.agent:
                continue
            if isinstance(f, K):
                if f.sub == g.sub and g.theta <= f.theta:
                    implies.append((a, b))
                if a < b and f.theta + g.theta > 1 and (g.sub == Not(f.sub) or f.sub == Not(g.sub)):
                    excludes.append((a, b))
            elif f.term == g.term and g.eta <= f.eta:
                implies.append((a, b))
    return implies, forced, excludes


def enumerate_types(
    closure: Closure,
    cap: int = DEFAULT_CLOSURE_CAP,
    type_cap: int = DEFAULT_TYPE_CAP,
) -> list:
    """All saturated coherent types, in increasing bitmask order."""
    if len(closure.core) > cap:
        raise ClosureTooLarge(f"{len(closure.core)} core formulas exceeds cap {cap}")
    atoms = [f for f in closure.core if isinstance(f, Atom)]
    modals = [f for f in closure.core if isinstance(f, (K, Kv))]
    candidates = 2 ** (len(atoms) + len(modals)) * _bell(len(closure.terms))
    if candidates > type_cap:
        raise ClosureTooLarge(f"{candidates} candidate types exceeds cap {type_cap}")

    implies, forced, excludes = _modal_constraints(modals)
    modal_choices = [
        bits
        for bits in itertools.product((False, True), repeat=len(modals))
        if all(bits[a] for a in forced)
        and all(bits[b] for a, b in implies if bits[a])
        and not any(bits[a] and bits[b] for a, b in excludes)
    ]
    order = sorted(closure.formulas, key=_size)
    index = closure.index
    masks = []
    for part in _partitions(list(closure.terms)):
        block = {t: k for k, cls in enumerate(part) for t in cls}
        for atom_bits in itertools.product((False, True), repeat=len(atoms)):
            for modal_bits in modal_choices:
                truth = dict(zip(atoms, atom_bits))
                truth.update(zip(modals, modal_bits))
                mask = 0
                for f in order:
                    if isinstance(f, Eq):
                        v = block[f.left] == block[f.right]
                    elif isinstance(f, Not):
                        v = not truth[f.sub]
                    elif isinstance(f, Imp):
                        v = (not truth[f.left]) or truth[f.right]
                    else:
                        v = truth[f]
                    truth[f] = v
                    if v:
                        mask |= 1 << index[f]
                masks.append(mask)
    return [TypeCandidate(closure, m) for m in sorted(masks)]


def _size(f) -> int:
    if isinstance(f, Not):
        return 1 + _size(f.sub)
    if isinstance(f, Imp):
        return 1 + _size(f.left) + _size(f.right)
    if isinstance(f, K):
        return 1 + _size(f.sub)
    return 1


# -- assignment configurations ---------------------------------------------------

def config_space(delta: TypeCandidate, k_size: int) -> list:
    """Assignments of coordinates ``1..k_size`` to the closure's terms whose
    equality pattern is exactly the one recorded in ``delta``.

    Each assignment is a tuple aligned with ``closure.terms``.
    """
    classes = delta.classes
    if k_size < len(classes):
        raise TooFewCoordinates(f"{len(classes)} equality classes need >= that many coordinates, got {k_size}")
    terms = delta.closure.terms
    where = {t: k for k, cls in enumerate(classes) for t in cls}
    return [
        tuple(coords[where[t]] for t in terms)
        for coords in itertools.permutations(range(1, k_size + 1), len(classes))
    ]


def modal_profile(gamma: TypeCandidate, agent: int) -> tuple:
    """All members of ``gamma`` that are (negated) modalities of ``agent``."""
    out = []
    for f in gamma.members:
        core = f.sub if isinstance(f, Not) else f
        if isinstance(core, (K, Kv)) and core.agent == agent:
            out.append(f)
    return tuple(out)


# -- constraint systems ------------------------------------------------------------

@dataclass
class _FCParts:
    variables: list
    base: list
    locks: list  # (term index, eta) per positive Kv literal


def _fc_parts(gamma, S, agent, k_size) -> _FCParts:
    closure = gamma.closure
    term_at = {t: j for j, t in enumerate(closure.terms)}
    variables = [(delta, f) for delta in S for f in config_space(delta, k_size)]
    keys = [(delta.mask, f) for delta, f in variables]
    base = [Row({key: 1 for key in keys}, EQ, 1)]
    locks = []
    for lit in modal_profile(gamma, agent):
        negative = isinstance(lit, Not)
        core = lit.sub if negative else lit
        if isinstance(core, K):
            coeffs = {key: 1 for key, (delta, _) in zip(keys, variables) if core.sub in delta}
            if negative:
                base.append(Row({v: -1 for v in coeffs}, GT, -core.theta))
            else:
                base.append(Row(coeffs, GE, core.theta))
        else:
            j = term_at[core.term]
            if negative:
                for k in range(1, k_size + 1):
                    fiber = {key: -1 for key in keys if key[1][j] == k}
                    base.append(Row(fiber, GT, -core.eta))
            else:
                locks.append((j, core.eta))
    return _FCParts(keys, base, locks)


def _lock_rows(parts: _FCParts, witness) -> list:
    return [
        Row({key: 1 for key in parts.variables if key[1][j] == k}, GE, eta)
        for (j, eta), k in zip(parts.locks, witness)
    ]


def build_fc(gamma: TypeCandidate, S, agent: int, k_size: int) -> list:
    """The joint constraint system for ``gamma`` and ``agent`` over ``S``.

    Every positive Kv literal asks for *some* coordinate carrying enough
    mass; the result lists one system per choice of coordinates (the
    Cartesian product, in lexicographic order).
    """
    parts = _fc_parts(gamma, S, agent, k_size)
    choices = itertools.product(range(1, k_size + 1), repeat=len(parts.locks))
    return [
        LinearSystem(tuple(parts.variables), tuple(parts.base + _lock_rows(parts, w)))
        for w in choices
    ]


def _canonical_witnesses(n, k_size):
    """Coordinate tuples up to relabelling: each entry at most one more
    than the largest earlier entry."""
    def extend(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for k in range(1, min(top + 1, k_size) + 1):
            yield from extend(prefix + [k], max(top, k))
    yield from extend([], 0)


def fc_feasible(gamma: TypeCandidate, S, agent: int, k_size: int) -> Optional[dict]:
    """Solve the constraint system; returns ``{(mask, f): mass}`` or ``None``.

    Coordinates are interchangeable labels, so lock choices are tried only
    up to relabelling.
    """
    parts = _fc_parts(gamma, S, agent, k_size)
    for witness in _canonical_witnesses(len(parts.locks), k_size):
        system = LinearSystem(tuple(parts.variables), tuple(parts.base + _lock_rows(parts, witness)))
        x = feasible_mixed(system)
        if x is not None:
            return x
    return None


# -- iterative elimination ----------------------------------------------------------

@dataclass(frozen=True)
class Eliminated:
    type: TypeCandidate
    agent: int
    profile: tuple


@dataclass(frozen=True)
class Stage:
    index: int
    surviving: tuple
    eliminated: tuple


@dataclass
class EliminationTrace:
    closure: Closure
    k_size: int
    stages: list

    @property
    def eliminated(self) -> list:
        return [e for stage in self.stages for e in stage.eliminated]

    def fc_dump(self, entry: Eliminated) -> list:
        """Rebuild the infeasible systems that removed ``entry``."""
        for stage in self.stages:
            if entry in stage.eliminated:
                return build_fc(entry.type, stage.surviving, entry.agent, self.k_size)
        raise ValueError("entry not in trace")

    def to_json(self) -> dict:
        return {
            "k_size": self.k_size,
            "stages": [
                {
                    "stage": s.index,
                    "surviving": len(s.surviving),
                    "eliminated": [
                        {
                            "type": e.type.labels(),
                            "agent": e.agent,
                            "profile": [to_text(f) for f in e.profile],
                        }
                        for e in s.eliminated
                    ],
                }
                for s in self.stages
            ],
            "star_axioms": [to_text(f) for f in emit_star_axioms(self)],
        }


@dataclass
class Elimination:
    survivors: list
    trace: EliminationTrace
    solutions: dict  # (TypeCandidate, agent) -> {(mask, f): Fraction}


def iterate_elimination(
    closure: Closure,
    k_size: int,
    types: Optional[list] = None,
    cap: int = DEFAULT_CLOSURE_CAP,
) -> Elimination:
    """Remove types whose constraint system fails for some agent, until
    nothing changes.  Solutions from the final (non-eliminating) pass are
    computed against the fixed point itself."""
    current = list(types) if types is not None else enumerate_types(closure, cap)
    stages = []
    ell = 0
    while True:
        removed, solutions, cache = [], {}, {}
        for gamma in current:
            for agent in closure.agents:
                profile = modal_profile(gamma, agent)
                key = (agent, profile)
                if key not in cache:
                    cache[key] = fc_feasible(gamma, current, agent, k_size)
                sol = cache[key]
                if sol is None:
                    removed.append(Eliminated(gamma, agent, profile))
                    break
                solutions[(gamma, agent)] = sol
        stages.append(Stage(ell, tuple(current), tuple(removed)))
        if not removed:
            break
        gone = {e.type for e in removed}
        current = [g for g in current if g not in gone]
        ell += 1
    stages.append(Stage(ell + 1, tuple(current), ()))
    return Elimination(current, EliminationTrace(closure, k_size, stages), solutions)


def emit_star_axioms(trace: EliminationTrace) -> list:
    """One blocking formula per eliminated type: the negated conjunction of
    its witnessing agent's modal literals."""
    return [Not(conj_all(e.profile)) for e in trace.eliminated]


def lindenbaum(chi: Formula, closure: Closure, survivors) -> Optional[TypeCandidate]:
    """First surviving type (in bitmask order) containing ``chi``."""
    if chi not in closure:
        raise FormulaNotInClosure(to_text(chi))
    for gamma in sorted(survivors, key=lambda g: g.mask):
        if chi in gamma:
            return gamma
    return None


def solution_is_normalized(sol: dict) -> bool:
    return sum(sol.values(), Fraction(0)) == 1 and all(q >= 0 for q in sol.values())
