"""Canonical model construction and the satisfiability decision.

The canonical model here is the finite quotient of the replica
construction: one world per (type, assignment) pair, carrying the full
mass ``z`` of its fiber.  Replicas can be materialized for display with
``replicas=N``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import BoundsTooLarge, MissingSolution
from .model import Evaluator, ProbModel, satisfies, validate
from .syntax import (
    Atom,
    Formula,
    agents_of,
    atoms_of,
    finite_closure,
    modal_depth,
    subformulas,
    terms_of,
    to_text,
)
from .typespace import (
    DEFAULT_CLOSURE_CAP,
    Elimination,
    config_space,
    emit_star_axioms,
    iterate_elimination,
    lindenbaum,
    resolve_k_size,
)

UNSAT_NOTE = "no model via canonical construction"


@dataclass
class CanonicalModel:
    model: ProbModel
    points: dict  # world id -> (TypeCandidate, assignment)
    k_size: int


def _world_id(position: int, f: tuple, replica: Optional[int] = None) -> str:
    name = f"w{position}"
    if f:
        name += "_" + ".".join(map(str, f))
    if replica is not None:
        name += f"#{replica}"
    return name


def build_canonical(closure, survivors, solutions, k_size: int, replicas: Optional[int] = None) -> CanonicalModel:
    """Assemble the canonical model from the surviving types and the
    constraint solutions retained at the fixed point."""
    if not survivors:
        raise MissingSolution("no surviving types to build a model from")
    survivors = sorted(survivors, key=lambda g: g.mask)
    position = {g.mask: k for k, g in enumerate(survivors, 1)}
    copies = [None] if replicas is None else list(range(1, replicas + 1))
    scale = None if replicas is None else 1 / (1 - Fraction(1, 2 ** replicas))

    points, ids = {}, {}
    for g in survivors:
        for f in config_space(g, k_size):
            for n in copies:
                w = _world_id(position[g.mask], f, n)
                points[w] = (g, f)
                ids.setdefault((g.mask, f), []).append((w, n))

    domain = tuple(f"d{k}" for k in range(1, max(k_size, 1) + 1))
    atoms = sorted({a for phi in closure.formulas for a in atoms_of(phi)})
    valuation = {(w, p): True for w, (g, _) in points.items() for p in atoms if Atom(p) in g}
    term_values = {
        (w, t): f"d{f[j]}" for w, (_, f) in points.items() for j, t in enumerate(closure.terms)
    }
    measures = {}
    for agent in closure.agents:
        for w, (g, _) in points.items():
            try:
                sol = solutions[(g, agent)]
            except KeyError:
                raise MissingSolution(f"type {g.mask} has no solution for agent {agent}") from None
            dist = {}
            for (mask, f), z in sol.items():
                if not z:
                    continue
                for u, n in ids[(mask, f)]:
                    dist[u] = z if n is None else z * scale / 2 ** n
            measures[(agent, w)] = dist
    model = ProbModel(tuple(points), domain, measures, valuation, term_values)
    return CanonicalModel(model, points, k_size)


@dataclass
class TruthLemmaReport:
    checked: int = 0
    violations: list = field(default_factory=list)  # (formula text, world, expected, actual)
    depth_order: list = field(default_factory=list)
    stratified: bool = True

    @property
    def ok(self) -> bool:
        return not self.violations and self.stratified


class _LoggingEvaluator(Evaluator):
    def __init__(self, m):
        super().__init__(m)
        self.log = []

    def extension(self, f):
        if f not in self.cache:
            self.log.append(f)
        return super().extension(f)


def verify_truth_lemma(canon: CanonicalModel, closure) -> TruthLemmaReport:
    """Check, world by world, that truth coincides with type membership for
    every closure formula, visiting formulas in nondecreasing modal depth."""
    report = TruthLemmaReport()
    ev = _LoggingEvaluator(canon.model)
    for phi in sorted(closure.formulas, key=modal_depth):
        depth = modal_depth(phi)
        report.depth_order.append(depth)
        start = len(ev.log)
        ext = ev.extension(phi)
        if any(modal_depth(g) > depth for g in ev.log[start:]):
            report.stratified = False
        for w, (gamma, _) in canon.points.items():
            expected = phi in gamma
            actual = w in ext
            report.checked += 1
            if expected != actual:
                report.violations.append((to_text(phi), w, expected, actual))
    return report


# -- decision ----------------------------------------------------------------------

@dataclass
class SatVerdict:
    sat: bool
    closure: object
    elimination: Elimination
    model: Optional[ProbModel] = None
    world: Optional[str] = None
    checked: bool = False
    canonical: Optional[CanonicalModel] = None
    star_axioms: list = field(default_factory=list)

    @property
    def trace(self):
        return self.elimination.trace

    def to_json(self) -> dict:
        if self.sat:
            return {
                "result": "sat",
                "model": self.model.to_json(),
                "world": self.world,
                "checked": self.checked,
            }
        return {
            "result": "unsat",
            "trace": self.trace.to_json(),
            "star_axioms": [to_text(f) for f in self.star_axioms],
            "note": UNSAT_NOTE,
        }


def decide_sat(chi: Formula, k_size=None, cap: int = DEFAULT_CLOSURE_CAP, replicas: Optional[int] = None) -> SatVerdict:
    """Closure, enumeration, elimination, Lindenbaum search, model
    construction and an independent model check of the result.

    ``k_size`` is ``"paper"``, ``"plus_one"`` (default) or an integer.
    """
    closure = finite_closure(chi)
    size = resolve_k_size(k_size, closure)
    elim = iterate_elimination(closure, size, cap=cap)
    gamma0 = lindenbaum(chi, closure, elim.survivors)
    if gamma0 is None:
        return SatVerdict(False, closure, elim, star_axioms=emit_star_axioms(elim.trace))
    canon = build_canonical(closure, elim.survivors, elim.solutions, size, replicas)
    f0 = config_space(gamma0, size)[0]
    world = next(w for w, (g, f) in canon.points.items() if g == gamma0 and f == f0)
    checked = not validate(canon.model, [chi]) and satisfies(canon.model, world, chi)
    return SatVerdict(True, closure, elim, canon.model, world, checked, canon)


# -- brute force oracle -------------------------------------------------------------

MAX_WORLDS, MAX_DOMAIN, MAX_DENOMINATOR = 4, 3, 3


def distributions(n: int, max_denominator: int) -> list:
    """Probability vectors over ``n`` points whose entries have
    denominators at most ``max_denominator``, in a fixed order."""
    out = set()
    for q in range(1, max_denominator + 1):
        for cut in itertools.combinations_with_replacement(range(q + 1), n - 1):
            parts = [b - a for a, b in zip((0,) + cut, cut + (q,))]
            out.add(tuple(Fraction(x, q) for x in parts))
    return sorted(out, key=lambda v: (max(x.denominator for x in v), tuple(-x for x in v)))


def _value_patterns(length: int, max_values: int):
    """Restricted growth strings: value labellings up to renaming."""
    def extend(prefix, top):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for k in range(min(top + 1, max_values - 1) + 1):
            yield from extend(prefix + [k], max(top, k))
    yield from extend([], -1)


def brute_force_sat(
    chi: Formula,
    max_worlds: int = 3,
    max_domain: int = 3,
    max_denominator: int = 3,
):
    """Exhaustive search for a pointed model of ``chi`` on a bounded grid.

    Worlds grow from one to ``max_worlds``; value labellings are enumerated
    up to renaming; every measure entry has denominator at most
    ``max_denominator``.  The designated world is always ``w1``.  When
    ``chi`` has modal depth at most one only the designated world's measures
    can matter, so the others are fixed to point masses on themselves.
    Returns ``(model, "w1")`` or ``None``.
    """
    if max_worlds > MAX_WORLDS or max_domain > MAX_DOMAIN or max_denominator > MAX_DENOMINATOR:
        raise BoundsTooLarge(
            f"bounds must satisfy worlds <= {MAX_WORLDS}, domain <= {MAX_DOMAIN}, "
            f"denominator <= {MAX_DENOMINATOR}"
        )
    if max_worlds < 1 or max_domain < 1 or max_denominator < 1:
        raise BoundsTooLarge("bounds must be positive")
    hits = brute_force_many([chi], max_worlds, max_domain, max_denominator)
    return hits[0]


def brute_force_many(formulas, max_worlds=3, max_domain=3, max_denominator=3) -> list:
    """Run the bounded search for several formulas over one shared
    enumeration; entry ``k`` is the first hit for ``formulas[k]``."""
    formulas = list(formulas)
    atoms = sorted(set().union(*(atoms_of(f) for f in formulas)))
    terms = sorted(set().union(*(terms_of(f) for f in formulas)))
    agents = sorted(set().union(*(agents_of(f) for f in formulas)))
    shallow = all(modal_depth(f) <= 1 for f in formulas)
    base = [g for f in formulas for g in subformulas(f) if modal_depth(g) == 0]
    hits = [None] * len(formulas)
    todo = set(range(len(formulas)))
    for n in range(1, max_worlds + 1):
        worlds = tuple(f"w{k}" for k in range(1, n + 1))
        dists = distributions(n, max_denominator)
        point = {w: {w: Fraction(1)} for w in worlds}
        measured = worlds[:1] if shallow else worlds
        slots = [(a, w) for a in agents for w in measured]
        for bits in itertools.product((False, True), repeat=n * len(atoms)):
            valuation = {
                (w, p): bits[k * len(atoms) + j]
                for k, w in enumerate(worlds)
                for j, p in enumerate(atoms)
                if bits[k * len(atoms) + j]
            }
            for pattern in _value_patterns(n * len(terms), max_domain):
                used = max(pattern, default=0) + 1
                domain = tuple(f"d{k}" for k in range(1, used + 1))
                term_values = {
                    (w, t): f"d{pattern[k * len(terms) + j] + 1}"
                    for k, w in enumerate(worlds)
                    for j, t in enumerate(terms)
                }
                skeleton = ProbModel(worlds, domain, {}, valuation, term_values)
                seed = Evaluator(skeleton)
                for g in base:
                    seed.extension(g)
                for choice in itertools.product(dists, repeat=len(slots)):
                    measures = {
                        (a, w): point[w] for a in agents for w in worlds
                    }
                    for (a, w), vec in zip(slots, choice):
                        measures[(a, w)] = {u: x for u, x in zip(worlds, vec) if x}
                    m = ProbModel(worlds, domain, measures, valuation, term_values)
                    ev = Evaluator(m)
                    ev.cache.update(seed.cache)
                    for k in list(todo):
                        if "w1" in ev.extension(formulas[k]):
                            hits[k] = (m, "w1")
                            todo.discard(k)
                    if not todo:
                        return hits
    return hits
