"""Formulas of the dual-threshold knowing-value language.

The core connectives are ``~`` and ``->``; conjunction, disjunction,
biconditional and the constants are expanded into the core when built.
Thresholds are :class:`fractions.Fraction` values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Iterator, Union

from .errors import BadRational, FormulaSyntaxError, ThresholdOutOfRange

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class Imp:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class K:
    agent: int
    theta: Fraction
    sub: "Formula"

    def __post_init__(self):
        _check_agent(self.agent)
        object.__setattr__(self, "theta", Fraction(self.theta))
        if not 0 <= self.theta <= 1:
            raise ThresholdOutOfRange(f"K threshold {self.theta} not in [0,1]")


@dataclass(frozen=True)
class Kv:
    agent: int
    eta: Fraction
    term: str

    def __post_init__(self):
        _check_agent(self.agent)
        object.__setattr__(self, "eta", Fraction(self.eta))
        if not HALF < self.eta <= 1:
            raise ThresholdOutOfRange(f"Kv threshold {self.eta} not in (1/2,1]")


Formula = Union[Atom, Eq, Not, Imp, K, Kv]
MODAL = (K, Kv)


def _check_agent(agent):
    if not isinstance(agent, int) or agent < 1:
        raise ValueError(f"agent index must be a positive integer, got {agent!r}")


# -- derived connectives -------------------------------------------------

TOP_ATOM = Atom("top")
TOP: Formula = Imp(TOP_ATOM, TOP_ATOM)
BOT: Formula = Not(TOP)


def conj(a: Formula, b: Formula) -> Formula:
    return Not(Imp(a, Not(b)))


def disj(a: Formula, b: Formula) -> Formula:
    return Imp(Not(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return conj(Imp(a, b), Imp(b, a))


def conj_all(items: Iterable[Formula]) -> Formula:
    """Left-folded conjunction; the empty conjunction is ``TOP``."""
    items = list(items)
    if not items:
        return TOP
    return reduce(conj, items)


# -- traversal -----------------------------------------------------------

def children(f: Formula) -> tuple:
    if isinstance(f, Not):
        return (f.sub,)
    if isinstance(f, Imp):
        return (f.left, f.right)
    if isinstance(f, K):
        return (f.sub,)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    """All subformulas of ``f`` including ``f`` itself (may repeat)."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(children(g))


def terms_of(f: Formula) -> set:
    out = set()
    for g in subformulas(f):
        if isinstance(g, Eq):
            out.update((g.left, g.right))
        elif isinstance(g, Kv):
            out.add(g.term)
    return out


def atoms_of(f: Formula) -> set:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def agents_of(f: Formula) -> set:
    return {g.agent for g in subformulas(f) if isinstance(g, MODAL)}


def thresholds_of(f: Formula) -> set:
    out = set()
    for g in subformulas(f):
        if isinstance(g, K):
            out.add(g.theta)
        elif isinstance(g, Kv):
            out.add(g.eta)
    return out


def modal_depth(f: Formula) -> int:
    if isinstance(f, (Atom, Eq)):
        return 0
    if isinstance(f, Not):
        return modal_depth(f.sub)
    if isinstance(f, Imp):
        return max(modal_depth(f.left), modal_depth(f.right))
    if isinstance(f, K):
        return modal_depth(f.sub) + 1
    if isinstance(f, Kv):
        return 1
    raise TypeError(f"not a formula: {f!r}")


# -- printing ------------------------------------------------------------

def format_rat(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _as_conj(f):
    if isinstance(f, Not) and isinstance(f.sub, Imp) and isinstance(f.sub.right, Not):
        return f.sub.left, f.sub.right.sub
    return None


def _as_iff(f):
    parts = _as_conj(f)
    if parts is None:
        return None
    a, b = parts
    if isinstance(a, Imp) and isinstance(b, Imp) and a.left == b.right and a.right == b.left:
        return a.left, a.right
    return None


def _operand(f: Formula) -> str:
    text = to_text(f)
    return f"({text})" if isinstance(f, Eq) else text


def to_text(f: Formula) -> str:
    """Canonical concrete syntax; ``parse(to_text(f)) == f``."""
    if f == TOP:
        return "T"
    if f == BOT:
        return "F"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, K):
        return f"K_{f.agent}^{{{format_rat(f.theta)}}}{_operand(f.sub)}"
    if isinstance(f, Kv):
        return f"Kv_{f.agent}^{{{format_rat(f.eta)}}}({f.term})"
    pair = _as_iff(f)
    if pair:
        return f"({to_text(pair[0])} <-> {to_text(pair[1])})"
    pair = _as_conj(f)
    if pair:
        return f"({to_text(pair[0])} & {to_text(pair[1])})"
    if isinstance(f, Not):
        return "~" + _operand(f.sub)
    if isinstance(f, Imp):
        if isinstance(f.left, Not):
            return f"({to_text(f.left.sub)} | {to_text(f.right)})"
        return f"({to_text(f.left)} -> {to_text(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


# -- parsing -------------------------------------------------------------

_WS = re.compile(r"\s*")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_MODAL = re.compile(r"(Kv|K)_(\d+)\s*\^\s*\{")
_RAT = re.compile(r"(\d+)\s*/\s*(\d+)|(\d*\.\d+)|(\d+)")
_BINOPS = ("<->", "->", "&", "|")
_RESERVED = {"T", "F"}


def parse_rat(text: str) -> Fraction:
    m = _RAT.fullmatch(text.strip())
    if not m:
        raise BadRational(f"not a rational literal: {text!r}")
    return _rat_from_match(m)


def _rat_from_match(m) -> Fraction:
    num, den, dec, nat = m.groups()
    if num is not None:
        if int(den) == 0:
            raise BadRational(f"zero denominator in {m.group(0)!r}")
        return Fraction(int(num), int(den))
    if dec is not None:
        return Fraction(dec)
    return Fraction(int(nat))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message):
        raise FormulaSyntaxError(message, self.pos)

    def skip(self):
        self.pos = _WS.match(self.text, self.pos).end()

    def peek(self, s):
        self.skip()
        return self.text.startswith(s, self.pos)

    def expect(self, s):
        if not self.peek(s):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def ident(self):
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            self.error("expected identifier")
        self.pos = m.end()
        return m.group(0)

    def term(self):
        start = self.pos
        name = self.ident()
        if name in _RESERVED:
            self.pos = start
            self.error(f"{name!r} is reserved and cannot name a term")
        return name

    def rat(self):
        self.skip()
        m = _RAT.match(self.text, self.pos)
        if not m:
            self.error("expected rational threshold")
        try:
            value = _rat_from_match(m)
        except BadRational as exc:
            self.error(str(exc))
        self.pos = m.end()
        return value

    def formula(self) -> Formula:
        self.skip()
        if self.peek("~"):
            self.pos += 1
            return Not(self.formula())
        m = _MODAL.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            kind, agent = m.group(1), int(m.group(2))
            if agent < 1:
                self.error("agent index must be >= 1")
            at = self.pos
            threshold = self.rat()
            self.expect("}")
            try:
                if kind == "Kv":
                    self.expect("(")
                    t = self.term()
                    self.expect(")")
                    return Kv(agent, threshold, t)
                sub = self.formula()
                return K(agent, threshold, sub)
            except ThresholdOutOfRange as exc:
                raise ThresholdOutOfRange(f"{exc} at position {at}") from None
        if self.peek("("):
            self.pos += 1
            left = self.formula()
            if self.peek(")"):
                self.pos += 1
                return left
            for op in _BINOPS:
                if self.peek(op):
                    self.pos += len(op)
                    break
            else:
                self.error("expected binary connective or ')'")
            right = self.formula()
            self.expect(")")
            return {"->": Imp, "&": conj, "|": disj, "<->": iff}[op](left, right)
        start = self.pos
        name = self.ident()
        if self.peek("=") and not self.text.startswith("=>", self.pos):
            if name in _RESERVED:
                self.pos = start
                self.error(f"{name!r} is reserved and cannot name a term")
            self.pos += 1
            return Eq(name, self.term())
        if name == "T":
            return TOP
        if name == "F":
            return BOT
        return Atom(name)


def parse(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    p.skip()
    if p.pos != len(text):
        p.error("unexpected trailing input")
    return f


# -- finite closure ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Closure:
    """A finite closure: members sorted by printed form.

    ``core`` holds the members that are not negations; a type is fixed by
    choosing, for each core member, either it or its negation.
    """

    formulas: tuple
    terms: tuple
    thresholds: tuple
    agents: tuple
    index: dict = field(repr=False)
    core: tuple = field(repr=False)

    def __contains__(self, f):
        return f in self.index

    def __len__(self):
        return len(self.formulas)

    def to_json(self) -> dict:
        return {
            "formulas": [to_text(f) for f in self.formulas],
            "terms": list(self.terms),
            "thresholds": [format_rat(q) for q in self.thresholds],
            "agents": list(self.agents),
        }


def closure_of(seeds: Iterable[Formula]) -> Closure:
    members = set()
    for seed in seeds:
        members.update(subformulas(seed))
    terms = set()
    for f in members:
        terms |= terms_of(f)
    for t in terms:
        for s in terms:
            members.add(Eq(t, s))
    for f in list(members):
        if not isinstance(f, Not):
            members.add(Not(f))
    ordered = tuple(sorted(members, key=to_text))
    thresholds, agents = set(), set()
    for f in ordered:
        if isinstance(f, K):
            thresholds.add(f.theta)
        elif isinstance(f, Kv):
            thresholds.add(f.eta)
        if isinstance(f, MODAL):
            agents.add(f.agent)
    return Closure(
        formulas=ordered,
        terms=tuple(sorted(terms)),
        thresholds=tuple(sorted(thresholds)),
        agents=tuple(sorted(agents)),
        index={f: k for k, f in enumerate(ordered)},
        core=tuple(f for f in ordered if not isinstance(f, Not)),
    )


def finite_closure(seed: Formula) -> Closure:
    """Smallest set containing ``seed`` closed under subformulas, single
    negation and equalities between its terms."""
    return closure_of([seed])
