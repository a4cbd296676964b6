"""Finite probabilistic knowing-value models and satisfaction.

All masses are exact :class:`~fractions.Fraction` values.  Measures are
stored sparsely: ``measures[(agent, world)]`` maps worlds to their
(strictly positive) mass.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    BadRational,
    ModelFormatError,
    UnknownAgent,
    UnknownTerm,
    UnknownValue,
    UnknownWorld,
)
from .syntax import Atom, Eq, Formula, Imp, K, Kv, Not, format_rat, terms_of


@dataclass(frozen=True, eq=False)
class ProbModel:
    worlds: tuple
    domain: tuple
    measures: Mapping  # (agent, world) -> {world: Fraction}
    valuation: Mapping  # (world, prop) -> bool; missing entries are false
    term_values: Mapping  # (world, term) -> value

    @property
    def agents(self) -> tuple:
        return tuple(sorted({a for a, _ in self.measures}))

    @property
    def terms(self) -> tuple:
        return tuple(sorted({t for _, t in self.term_values}))

    def mass(self, agent: int, world, event: Iterable) -> Fraction:
        try:
            dist = self.measures[(agent, world)]
        except KeyError:
            if world not in self.worlds:
                raise UnknownWorld(world) from None
            raise UnknownAgent(agent) from None
        return sum((dist.get(u, 0) for u in event), Fraction(0))

    # -- JSON --------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "worlds": list(self.worlds),
            "domain": list(self.domain),
            "valuation": {
                w: {p: v for (u, p), v in sorted(self.valuation.items()) if u == w}
                for w in self.worlds
            },
            "term_values": {
                w: {t: d for (u, t), d in sorted(self.term_values.items()) if u == w}
                for w in self.worlds
            },
            "measures": {
                f"agent:{a}": {
                    w: {u: format_fraction(q) for u, q in self.measures[(a, w)].items()}
                    for w in self.worlds
                    if (a, w) in self.measures
                }
                for a in self.agents
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data: dict) -> "ProbModel":
        try:
            worlds = tuple(data["worlds"])
            domain = tuple(data["domain"])
            valuation = {
                (w, p): bool(v)
                for w, props in data.get("valuation", {}).items()
                for p, v in props.items()
            }
            term_values = {
                (w, t): d
                for w, vals in data.get("term_values", {}).items()
                for t, d in vals.items()
            }
            measures = {}
            for key, rows in data.get("measures", {}).items():
                if not key.startswith("agent:"):
                    raise ModelFormatError(f"bad measure key {key!r}")
                agent = int(key[len("agent:"):])
                for w, dist in rows.items():
                    masses = {u: _json_rat(q) for u, q in dist.items()}
                    measures[(agent, w)] = {u: q for u, q in masses.items() if q != 0}
        except (KeyError, TypeError, AttributeError, ValueError) as exc:
            if isinstance(exc, (ModelFormatError, BadRational)):
                raise
            raise ModelFormatError(f"malformed model JSON: {exc}") from exc
        return cls(worlds, domain, measures, valuation, term_values)

    @classmethod
    def loads(cls, text: str) -> "ProbModel":
        return cls.from_json(json.loads(text))


def _json_rat(value) -> Fraction:
    try:
        return Fraction(str(value).replace(" ", ""))
    except ZeroDivisionError:
        raise BadRational(f"zero denominator in {value!r}") from None
    except ValueError:
        raise BadRational(f"not a rational: {value!r}") from None


def format_fraction(q: Fraction) -> str:
    """Exact ``a/b`` string, always with a denominator."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


# -- validation ----------------------------------------------------------

def validate(m: ProbModel, formulas: Iterable[Formula] = ()) -> list:
    """Return a list of violation messages; an empty list means ok.

    Term-value totality is checked for every term already present in the
    model plus every term referenced by ``formulas``.
    """
    problems = []
    worlds = set(m.worlds)
    if not m.worlds:
        problems.append("world set is empty")
    if not m.domain:
        problems.append("domain is empty")
    domain = set(m.domain)
    agents = m.agents
    for a in agents:
        for w in m.worlds:
            if (a, w) not in m.measures:
                problems.append(f"agent {a}: no measure at world {w}")
    for (a, w), dist in m.measures.items():
        if w not in worlds:
            problems.append(f"agent {a}: measure attached to unknown world {w}")
        for u, q in dist.items():
            if u not in worlds:
                problems.append(f"agent {a}, world {w}: mass on unknown world {u}")
            if q < 0:
                problems.append(f"agent {a}, world {w}: negative mass {format_rat(q)} on {u}")
        total = sum(dist.values(), Fraction(0))
        if total != 1:
            problems.append(f"agent {a}, world {w}: sum = {format_rat(total)} != 1")
    for (w, _), _v in m.valuation.items():
        if w not in worlds:
            problems.append(f"valuation mentions unknown world {w}")
    for (w, t), d in m.term_values.items():
        if w not in worlds:
            problems.append(f"term value for {t} at unknown world {w}")
        if d not in domain:
            problems.append(f"term {t} at world {w}: value {d} not in domain")
    needed = set(m.terms)
    for f in formulas:
        needed |= terms_of(f)
    for t in sorted(needed):
        for w in m.worlds:
            if (w, t) not in m.term_values:
                problems.append(f"missing term value for {t} at world {w}")
    return problems


# -- semantics -----------------------------------------------------------

def event_value(m: ProbModel, t: str, d) -> frozenset:
    """Worlds where term ``t`` takes value ``d``."""
    if d not in m.domain:
        raise UnknownValue(d)
    out = []
    for w in m.worlds:
        try:
            if m.term_values[(w, t)] == d:
                out.append(w)
        except KeyError:
            raise UnknownTerm(f"no value for term {t!r} at world {w!r}") from None
    return frozenset(out)


def fiber_masses(m: ProbModel, agent: int, world, t: str) -> dict:
    """Mass of each value fiber of ``t`` under the agent's measure at ``world``."""
    return {d: m.mass(agent, world, event_value(m, t, d)) for d in m.domain}


def kv_exists(m: ProbModel, agent: int, world, t: str, eta) -> bool:
    return any(q >= eta for q in fiber_masses(m, agent, world, t).values())


def kv_unique(m: ProbModel, agent: int, world, t: str, eta) -> bool:
    return sum(q >= eta for q in fiber_masses(m, agent, world, t).values()) == 1


class Evaluator:
    """Bottom-up extension computation, memoized per subformula.

    One evaluator belongs to one model; the cache is never shared between
    models.
    """

    def __init__(self, m: ProbModel):
        self.model = m
        self.cache = {}
        self.all = frozenset(m.worlds)

    def extension(self, f: Formula) -> frozenset:
        try:
            return self.cache[f]
        except KeyError:
            pass
        m = self.model
        if isinstance(f, Atom):
            ext = frozenset(w for w in m.worlds if m.valuation.get((w, f.name), False))
        elif isinstance(f, Eq):
            ext = frozenset(w for w in m.worlds if self._val(w, f.left) == self._val(w, f.right))
        elif isinstance(f, Not):
            ext = self.all - self.extension(f.sub)
        elif isinstance(f, Imp):
            ext = (self.all - self.extension(f.left)) | self.extension(f.right)
        elif isinstance(f, K):
            event = self.extension(f.sub)
            ext = frozenset(w for w in m.worlds if m.mass(f.agent, w, event) >= f.theta)
        elif isinstance(f, Kv):
            fibers = [event_value(m, f.term, d) for d in m.domain]
            ext = frozenset(
                w
                for w in m.worlds
                if sum(m.mass(f.agent, w, x) >= f.eta for x in fibers) == 1
            )
        else:
            raise TypeError(f"not a formula: {f!r}")
        self.cache[f] = ext
        return ext

    def _val(self, w, t):
        try:
            return self.model.term_values[(w, t)]
        except KeyError:
            raise UnknownTerm(f"no value for term {t!r} at world {w!r}") from None


def extension(m: ProbModel, f: Formula) -> frozenset:
    return Evaluator(m).extension(f)


def satisfies(m: ProbModel, w, f: Formula) -> bool:
    if w not in m.worlds:
        raise UnknownWorld(w)
    return w in Evaluator(m).extension(f)


def valid_in_model(m: ProbModel, f: Formula) -> bool:
    return Evaluator(m).extension(f) == frozenset(m.worlds)


# -- construction helpers --------------------------------------------------

def make_model(worlds, domain, measures, valuation=None, term_values=None) -> ProbModel:
    """Build a model from plain dicts, dropping zero masses.

    ``measures`` maps ``(agent, world)`` to ``{world: mass}``; masses may be
    anything :class:`Fraction` accepts.
    """
    clean = {
        key: {u: Fraction(q) for u, q in dist.items() if Fraction(q) != 0}
        for key, dist in measures.items()
    }
    return ProbModel(
        tuple(worlds), tuple(domain), clean, dict(valuation or {}), dict(term_values or {})
    )


def random_model(
    rng: random.Random,
    atoms=("p", "q"),
    terms=("t", "s"),
    agents=(1, 2),
    max_worlds: int = 4,
    max_domain: int = 3,
    max_weight: int = 8,
) -> ProbModel:
    """Small random model with masses from normalized integer weights."""
    n = rng.randint(1, max_worlds)
    worlds = tuple(f"w{k}" for k in range(1, n + 1))
    domain = tuple(f"d{k}" for k in range(1, rng.randint(1, max_domain) + 1))
    measures = {}
    for a in agents:
        for w in worlds:
            weights = [rng.randint(0, max_weight) for _ in worlds]
            if not any(weights):
                weights[rng.randrange(n)] = 1
            total = sum(weights)
            measures[(a, w)] = {u: Fraction(x, total) for u, x in zip(worlds, weights) if x}
    valuation = {(w, p): rng.random() < 0.5 for w in worlds for p in atoms}
    term_values = {(w, t): rng.choice(domain) for w in worlds for t in terms}
    return ProbModel(worlds, domain, measures, valuation, term_values)


def intro_model(masses=("62/100", "23/100", "15/100")) -> ProbModel:
    """Three worlds, three distinct candidate values of ``t``; agent 1 holds
    the given posterior over the worlds at every world."""
    worlds = ("w1", "w2", "w3")
    dist = {w: Fraction(q) for w, q in zip(worlds, masses)}
    return make_model(
        worlds,
        ("d1", "d2", "d3"),
        {(1, w): dist for w in worlds},
        {},
        {(w, "t"): f"d{k}" for k, w in enumerate(worlds, 1)},
    )
