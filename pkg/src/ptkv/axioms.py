"""Axiom schemata as formula generators, plus a randomized validity harness.

Every schema instance is checked at every world of small random models.
A sound schema never fails; the negative controls (principles that are
*not* valid under threshold semantics) must fail quickly, which shows the
harness can find counterexamples at all.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import SideConditionViolated
from .model import ProbModel, extension, random_model
from .syntax import (
    HALF,
    Atom,
    Eq,
    Formula,
    Imp,
    K,
    Kv,
    Not,
    conj,
    disj,
    format_rat,
    iff,
    to_text,
)

SCHEMATA = (
    "TAUT", "EqRef", "EqSym", "EqTrans", "EqSub",
    "KMon", "KImp", "KExcl", "KZero", "KEqSub1", "KvEqSub1",
    "KSub1", "KAdd1", "KvMon",
)
RULES = ("NecK",)

K_GRID = tuple(Fraction(x) for x in ("0", "1/5", "1/4", "1/3", "2/5", "1/2", "3/5", "2/3", "3/4", "4/5", "1"))
KV_GRID = tuple(Fraction(x) for x in ("3/5", "2/3", "3/4", "4/5", "1"))

ATOMS = ("p", "q")
TERMS = ("t", "s")
SCHEMA_TERMS = ("t", "s", "u")
AGENTS = (1, 2)

# propositional tautology templates over placeholders p, q, r
_P, _Q, _R = Atom("p"), Atom("q"), Atom("r")
TAUT_TEMPLATES = {
    "identity": Imp(_P, _P),
    "excluded_middle": disj(_P, Not(_P)),
    "peirce": Imp(Imp(Imp(_P, _Q), _P), _P),
    "de_morgan_and": iff(Not(conj(_P, _Q)), disj(Not(_P), Not(_Q))),
    "de_morgan_or": iff(Not(disj(_P, _Q)), conj(Not(_P), Not(_Q))),
    "double_negation": iff(Not(Not(_P)), _P),
    "contraposition": Imp(Imp(_P, _Q), Imp(Not(_Q), Not(_P))),
    "distribution": Imp(Imp(_P, Imp(_Q, _R)), Imp(Imp(_P, _Q), Imp(_P, _R))),
    "syllogism": Imp(conj(Imp(_P, _Q), Imp(_Q, _R)), Imp(_P, _R)),
}


def substitute(f: Formula, mapping: dict) -> Formula:
    """Replace atoms by formulas."""
    if isinstance(f, Atom):
        return mapping.get(f.name, f)
    if isinstance(f, Not):
        return Not(substitute(f.sub, mapping))
    if isinstance(f, Imp):
        return Imp(substitute(f.left, mapping), substitute(f.right, mapping))
    if isinstance(f, K):
        return K(f.agent, f.theta, substitute(f.sub, mapping))
    return f


def _require(ok: bool, message: str):
    if not ok:
        raise SideConditionViolated(message)


def instantiate(schema: str, params: Optional[dict] = None, **kw) -> Formula:
    """Build a concrete instance of ``schema``.

    Recognised parameters: ``agent`` (default 1), ``phi``, ``psi``,
    ``t``, ``s``, ``u``, ``theta``, ``theta2``, ``alpha``, ``beta``,
    ``eta``, ``zeta``, and for TAUT ``template`` plus ``p``/``q``/``r``.
    """
    p = dict(params or {}, **kw)
    i = p.get("agent", 1)
    phi, psi = p.get("phi"), p.get("psi")
    t, s, u = p.get("t", "t"), p.get("s", "s"), p.get("u", "u")
    if schema == "TAUT":
        template = TAUT_TEMPLATES[p.get("template", "identity")]
        return substitute(template, {k: p[k] for k in "pqr" if k in p})
    if schema == "EqRef":
        return Eq(t, t)
    if schema == "EqSym":
        return Imp(Eq(t, s), Eq(s, t))
    if schema == "EqTrans":
        return Imp(conj(Eq(t, s), Eq(s, u)), Eq(t, u))
    if schema == "EqSub":
        return Imp(Eq(t, s), iff(Eq(t, u), Eq(s, u)))
    if schema == "KMon":
        theta, theta2 = Fraction(p["theta"]), Fraction(p["theta2"])
        _require(theta <= theta2, f"KMon needs theta <= theta' (got {format_rat(theta)} > {format_rat(theta2)})")
        return Imp(K(i, theta2, phi), K(i, theta, phi))
    if schema == "KImp":
        alpha, beta = Fraction(p["alpha"]), Fraction(p["beta"])
        gamma = max(Fraction(0), alpha + beta - 1)
        return Imp(K(i, alpha, Imp(phi, psi)), Imp(K(i, beta, phi), K(i, gamma, psi)))
    if schema == "KExcl":
        alpha, beta = Fraction(p["alpha"]), Fraction(p["beta"])
        _require(alpha + beta > 1, f"KExcl needs alpha+beta > 1 (got {format_rat(alpha + beta)})")
        return Imp(K(i, alpha, phi), Not(K(i, beta, Not(phi))))
    if schema == "KZero":
        return K(i, 0, phi)
    if schema == "KEqSub1":
        theta = Fraction(p["theta"])
        return Imp(K(i, 1, Eq(t, s)), iff(K(i, theta, Eq(t, u)), K(i, theta, Eq(s, u))))
    if schema == "KvEqSub1":
        eta = Fraction(p["eta"])
        return Imp(K(i, 1, Eq(t, s)), iff(Kv(i, eta, t), Kv(i, eta, s)))
    if schema == "KSub1":
        theta = Fraction(p["theta"])
        return Imp(K(i, 1, iff(phi, psi)), iff(K(i, theta, phi), K(i, theta, psi)))
    if schema == "KAdd1":
        alpha, beta = Fraction(p["alpha"]), Fraction(p["beta"])
        _require(alpha + beta <= 1, f"KAdd1 needs alpha+beta <= 1 (got {format_rat(alpha + beta)})")
        premise = conj(conj(K(i, alpha, phi), K(i, beta, psi)), K(i, 1, Not(conj(phi, psi))))
        return Imp(premise, K(i, alpha + beta, disj(phi, psi)))
    if schema == "KvMon":
        eta, zeta = Fraction(p["eta"]), Fraction(p["zeta"])
        _require(HALF < zeta <= eta, f"KvMon needs 1/2 < zeta <= eta (got zeta={format_rat(zeta)}, eta={format_rat(eta)})")
        return Imp(Kv(i, eta, t), Kv(i, zeta, t))
    raise KeyError(f"unknown schema {schema!r}")


def necessitation(f: Formula, agent: int, theta) -> Formula:
    """Apply the necessitation rule; validity of ``f`` is the caller's
    business."""
    return K(agent, Fraction(theta), f)


# -- random instances ------------------------------------------------------------

def random_formula(rng: random.Random, depth: int = 2, size: int = 2) -> Formula:
    """Random formula of modal depth at most ``depth`` over two atoms, two
    terms and two agents; ``size`` bounds the Boolean nesting."""
    if size == 0 or rng.random() < 0.3:
        kind = rng.random()
        if kind < 0.55 or (kind >= 0.8 and depth == 0):
            return Atom(rng.choice(ATOMS))
        if kind < 0.8:
            return Eq(rng.choice(TERMS), rng.choice(TERMS))
        return Kv(rng.choice(AGENTS), rng.choice(KV_GRID), rng.choice(TERMS))
    kind = rng.random()
    if kind < 0.3:
        return Not(random_formula(rng, depth, size - 1))
    if kind < 0.65 or depth == 0:
        return Imp(random_formula(rng, depth, size - 1), random_formula(rng, depth, size - 1))
    return K(rng.choice(AGENTS), rng.choice(K_GRID), random_formula(rng, depth - 1, size - 1))


def random_parameters(schema: str, rng: random.Random) -> dict:
    """Parameters satisfying the schema's side conditions by construction."""
    p = {
        "agent": rng.choice(AGENTS),
        "phi": random_formula(rng),
        "psi": random_formula(rng),
        "t": rng.choice(SCHEMA_TERMS),
        "s": rng.choice(SCHEMA_TERMS),
        "u": rng.choice(SCHEMA_TERMS),
        "theta": rng.choice(K_GRID),
        "eta": rng.choice(KV_GRID),
    }
    if schema == "TAUT":
        p["template"] = rng.choice(sorted(TAUT_TEMPLATES))
        p.update(p=random_formula(rng), q=random_formula(rng), r=random_formula(rng))
    elif schema == "KMon":
        a, b = sorted((rng.choice(K_GRID), rng.choice(K_GRID)))
        p.update(theta=a, theta2=b)
    elif schema in ("KImp", "KExcl", "KAdd1"):
        while True:
            alpha, beta = rng.choice(K_GRID), rng.choice(K_GRID)
            if schema == "KExcl" and alpha + beta <= 1:
                continue
            if schema == "KAdd1" and alpha + beta > 1:
                continue
            break
        p.update(alpha=alpha, beta=beta)
    elif schema == "KvMon":
        zeta, eta = sorted((rng.choice(KV_GRID), rng.choice(KV_GRID)))
        p.update(eta=eta, zeta=zeta)
    return p


# negative controls: principles that fail under threshold semantics

def _factivity(rng):
    phi = random_formula(rng)
    return Imp(K(rng.choice(AGENTS), rng.choice(K_GRID), phi), phi)


def _positive_introspection(rng):
    i, theta, phi = rng.choice(AGENTS), rng.choice(K_GRID), random_formula(rng)
    return Imp(K(i, theta, phi), K(i, theta, K(i, theta, phi)))


def _negative_introspection(rng):
    i, theta, phi = rng.choice(AGENTS), rng.choice(K_GRID), random_formula(rng)
    return Imp(Not(K(i, theta, phi)), K(i, theta, Not(K(i, theta, phi))))


def _kv_introspection(rng):
    i, eta, t = rng.choice(AGENTS), rng.choice(KV_GRID), rng.choice(TERMS)
    return Imp(Kv(i, eta, t), K(i, rng.choice(K_GRID[1:]), Kv(i, eta, t)))


def _kvmon_reversed(rng):
    while True:
        eta, zeta = rng.choice(KV_GRID), rng.choice(KV_GRID)
        if zeta > eta:
            break
    i, t = rng.choice(AGENTS), rng.choice(TERMS)
    return Imp(Kv(i, eta, t), Kv(i, zeta, t))


NEGATIVE_CONTROLS: dict = {
    "factivity": _factivity,
    "positive_introspection": _positive_introspection,
    "negative_introspection": _negative_introspection,
    "kv_introspection": _kv_introspection,
    "kvmon_reversed": _kvmon_reversed,
}


def schema_generator(schema: str) -> Callable[[random.Random], Formula]:
    if schema in NEGATIVE_CONTROLS:
        return NEGATIVE_CONTROLS[schema]
    return lambda rng: instantiate(schema, random_parameters(schema, rng))


# -- harness -----------------------------------------------------------------------

def _falsifying_worlds(m: ProbModel, f: Formula) -> list:
    ext = extension(m, f)
    return [w for w in m.worlds if w not in ext]


def _drop_world(m: ProbModel, gone) -> ProbModel:
    worlds = tuple(w for w in m.worlds if w != gone)
    measures = {}
    for (a, w), dist in m.measures.items():
        if w == gone:
            continue
        kept = {u: q for u, q in dist.items() if u != gone}
        total = sum(kept.values(), Fraction(0))
        measures[(a, w)] = {u: q / total for u, q in kept.items()} if total else {w: Fraction(1)}
    valuation = {k: v for k, v in m.valuation.items() if k[0] != gone}
    term_values = {k: v for k, v in m.term_values.items() if k[0] != gone}
    return ProbModel(worlds, m.domain, measures, valuation, term_values)


def _merge_values(m: ProbModel, keep, gone) -> ProbModel:
    domain = tuple(d for d in m.domain if d != gone)
    term_values = {k: (keep if v == gone else v) for k, v in m.term_values.items()}
    return ProbModel(m.worlds, domain, m.measures, m.valuation, term_values)


def shrink(m: ProbModel, f: Formula) -> ProbModel:
    """Greedily remove worlds, then merge values, keeping ``f`` falsified."""
    changed = True
    while changed:
        changed = False
        for w in m.worlds:
            if len(m.worlds) > 1:
                smaller = _drop_world(m, w)
                if _falsifying_worlds(smaller, f):
                    m, changed = smaller, True
                    break
        if changed:
            continue
        for keep in m.domain:
            for gone in m.domain:
                if keep != gone:
                    merged = _merge_values(m, keep, gone)
                    if _falsifying_worlds(merged, f):
                        m, changed = merged, True
                        break
            if changed:
                break
    return m


@dataclass
class SchemaResult:
    checks: int = 0
    failures: int = 0
    counterexamples: list = field(default_factory=list)

    def merge(self, other: "SchemaResult") -> "SchemaResult":
        return SchemaResult(
            self.checks + other.checks,
            self.failures + other.failures,
            self.counterexamples + other.counterexamples,
        )


@dataclass
class SoundnessReport:
    seed: int
    trials: int
    results: dict

    @property
    def ok(self) -> bool:
        return all(r.failures == 0 for r in self.results.values())

    def to_json(self) -> dict:
        return {
            name: {
                "checks": r.checks,
                "failures": r.failures,
                "counterexamples": r.counterexamples,
            }
            for name, r in self.results.items()
        }


def run_trial(name: str, seed: int, trial: int, keep: int = 1) -> SchemaResult:
    rng = random.Random(f"{seed}:{name}:{trial}")
    m = random_model(rng, atoms=ATOMS, terms=SCHEMA_TERMS, agents=AGENTS)
    instance = schema_generator(name)(rng)
    bad = _falsifying_worlds(m, instance)
    result = SchemaResult(checks=len(m.worlds), failures=len(bad))
    if bad and keep:
        small = shrink(m, instance)
        result.counterexamples.append(
            {
                "instance": to_text(instance),
                "world": _falsifying_worlds(small, instance)[0],
                "model": small.to_json(),
            }
        )
    return result


def soundness_suite(
    seed: int = 42,
    trials: int = 500,
    schemata=SCHEMATA,
    controls=(),
    max_counterexamples: int = 3,
) -> SoundnessReport:
    """Check every schema (and any requested negative control) at every
    world of ``trials`` random models."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = {}
    for name in list(schemata) + list(controls):
        total = SchemaResult()
        for k in range(trials):
            keep = len(total.counterexamples) < max_counterexamples
            total = total.merge(run_trial(name, seed, k, keep=keep))
        results[name] = total
    return SoundnessReport(seed, trials, results)


def nec_preservation(seed: int = 42, samples: int = 60, candidates: int = 200) -> tuple:
    """Check that necessitation preserves validity on a fixed sample.

    Returns ``(premises_valid_on_sample, failures)`` where a failure is a
    premise valid on every sampled model whose necessitation is not.
    """
    rng = random.Random(f"{seed}:nec")
    models = [random_model(rng, atoms=ATOMS + ("r",), terms=SCHEMA_TERMS, agents=AGENTS) for _ in range(samples)]
    pool = []
    for k in range(candidates):
        if k % 2:
            pool.append(random_formula(rng))
        else:
            name = SCHEMATA[k // 2 % len(SCHEMATA)]
            pool.append(schema_generator(name)(rng))
    valid, failures = 0, []
    for f in pool:
        if all(not _falsifying_worlds(m, f) for m in models):
            valid += 1
            g = necessitation(f, rng.choice(AGENTS), rng.choice(K_GRID))
            if any(_falsifying_worlds(m, g) for m in models):
                failures.append(to_text(g))
    return valid, failures
