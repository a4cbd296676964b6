import itertools
from fractions import Fraction
from math import factorial

import pytest
from hypothesis import HealthCheck, assume, given, settings

from ptkv.errors import ClosureTooLarge, FormulaNotInClosure, TooFewCoordinates
from ptkv.lp import EQ, GE, GT, check_witness
from ptkv.syntax import Atom, Eq, K, Kv, Not, conj, conj_all, finite_closure, parse
from ptkv.typespace import (
    TypeCandidate,
    build_fc,
    config_space,
    emit_star_axioms,
    enumerate_types,
    fc_feasible,
    iterate_elimination,
    lindenbaum,
    modal_profile,
    resolve_k_size,
    solution_is_normalized,
)

from strategies import small_formulas

F = Fraction
P = Atom("p")
KV = Kv(1, F(3, 5), "t")


def types_of(text):
    c = finite_closure(parse(text))
    return c, enumerate_types(c)


def with_members(types, *members):
    return [g for g in types if all(m in g for m in members)]


def direct_configs(delta, m):
    """Oracle: every map from terms to 1..m, kept when its equality pattern
    is exactly the one in ``delta``."""
    terms = delta.closure.terms
    out = []
    for f in itertools.product(range(1, m + 1), repeat=len(terms)):
        if all((f[a] == f[b]) == (Eq(terms[a], terms[b]) in delta) for a in range(len(terms)) for b in range(len(terms))):
            out.append(f)
    return out


def small_enough(closure, limit=64):
    modal = sum(1 for f in closure.core if isinstance(f, (K, Kv, Atom)))
    return 2 ** modal <= limit and len(closure.terms) <= 2


# -- enumeration ---------------------------------------------------------------------------

def test_atom_has_two_types():
    c, types = types_of("p")
    assert [g.members for g in types] in ([(P,), (Not(P),)], [(Not(P),), (P,)])


def test_reflexive_equalities_in_every_type():
    c, types = types_of("(K_1^{1/2}(t = s) -> Kv_2^{2/3}(u))")
    for g in types:
        for t in c.terms:
            assert Eq(t, t) in g


def test_k_monotonicity_respected():
    hi, lo = K(1, F(3, 4), P), K(1, F(1, 2), P)
    c = finite_closure(conj(hi, lo))
    types = enumerate_types(c)
    assert types and not with_members(types, hi, Not(lo))


def test_every_type_is_saturated_and_equalities_are_equivalences():
    c, types = types_of("(K_1^{1/2}(t = s) & ~(s = u))")
    for g in types:
        for f in c.core:
            assert (f in g) != (Not(f) in g)
        same = lambda a, b: Eq(a, b) in g
        for a, b, d in itertools.product(c.terms, repeat=3):
            assert same(a, b) == same(b, a)
            if same(a, b) and same(b, d):
                assert same(a, d)


def test_closure_cap():
    with pytest.raises(ClosureTooLarge):
        enumerate_types(finite_closure(parse("((p & q) -> (q | p))")), cap=2)
    with pytest.raises(ClosureTooLarge):
        enumerate_types(finite_closure(parse("((p & q) -> r)")), type_cap=4)


# -- configurations ---------------------------------------------------------------------------

def test_equal_terms_two_coordinates():
    c, types = types_of("(t = s)")
    (delta,) = with_members(types, Eq("t", "s"))
    assert sorted(config_space(delta, 2)) == [(1, 1), (2, 2)]


def test_distinct_terms_two_coordinates():
    c, types = types_of("(t = s)")
    (delta,) = with_members(types, Not(Eq("t", "s")))
    assert sorted(config_space(delta, 2)) == [(1, 2), (2, 1)]


def test_single_term_single_coordinate():
    c, types = types_of("Kv_1^{3/5}(t)")
    for g in types:
        assert config_space(g, 1) == [(1,)]


def test_too_few_coordinates():
    c, types = types_of("~(t = s)")
    (delta,) = with_members(types, Not(Eq("t", "s")))
    with pytest.raises(TooFewCoordinates):
        config_space(delta, 1)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_config_count_matches_direct_enumeration(m):
    c, types = types_of("(K_1^{1/2}(t = s) -> Kv_2^{2/3}(u))")
    for g in types:
        k = len(g.classes)
        if k > m:
            continue
        got = config_space(g, m)
        assert sorted(got) == sorted(direct_configs(g, m))
        assert len(got) == factorial(m) // factorial(m - k)


def test_k_size_policies():
    c = finite_closure(parse("(t = s)"))
    assert resolve_k_size("paper", c) == 2
    assert resolve_k_size("plus_one", c) == 3
    assert resolve_k_size(None, c) == 3
    assert resolve_k_size(5, c) == 5
    with pytest.raises(ValueError):
        resolve_k_size(0, c)


# -- profiles ----------------------------------------------------------------------------------

def test_profile_filters_by_agent():
    lits = [K(1, F(1, 2), P), Not(KV), K(2, F(1), Atom("q"))]
    c = finite_closure(conj_all(lits))
    gamma = with_members(enumerate_types(c), *lits)[0]
    assert set(modal_profile(gamma, 1)) == {K(1, F(1, 2), P), Not(KV)}


def test_profile_empty_without_modalities():
    c, types = types_of("p")
    assert modal_profile(types[0], 1) == ()


def test_equal_profiles_give_identical_systems():
    c, types = types_of("((p -> K_1^{1/2}q) & Kv_2^{2/3}(t))")
    k = resolve_k_size(None, c)
    for agent in c.agents:
        groups = {}
        for g in types:
            groups.setdefault(modal_profile(g, agent), []).append(g)
        assert any(len(v) > 1 for v in groups.values())
        for same in groups.values():
            first = build_fc(same[0], types, agent, k)
            for other in same[1:]:
                assert build_fc(other, types, agent, k) == first


# -- constraint systems ---------------------------------------------------------------------------

def test_positive_kv_two_coordinates():
    c, types = types_of("Kv_1^{3/5}(t)")
    (gamma,) = with_members(types, KV)
    systems = build_fc(gamma, [gamma], 1, 2)
    assert len(systems) == 2
    for k, s in enumerate(systems, 1):
        rels = sorted(r.rel for r in s.rows)
        assert rels == [EQ, GE]
        lock = next(r for r in s.rows if r.rel == GE)
        assert lock.coeffs == {(gamma.mask, (k,)): 1} and lock.rhs == F(3, 5)
    sol = fc_feasible(gamma, [gamma], 1, 2)
    assert solution_is_normalized(sol)
    assert max(sol.values()) >= F(3, 5)
    assert fc_feasible(gamma, [gamma], 1, 1) == {(gamma.mask, (1,)): 1}


def test_negative_kv_one_coordinate_is_infeasible():
    c, types = types_of("Kv_1^{3/5}(t)")
    (gamma,) = with_members(types, Not(KV))
    (s,) = build_fc(gamma, [gamma], 1, 1)
    strict = [r for r in s.rows if r.rel == GT]
    assert len(s.rows) == 2 and len(strict) == 1
    assert strict[0].coeffs == {(gamma.mask, (1,)): -1} and strict[0].rhs == F(-3, 5)
    assert fc_feasible(gamma, [gamma], 1, 1) is None


def test_no_modal_literals_simplex_only():
    c, types = types_of("p")
    (s,) = build_fc(types[0], types, 1, 1)
    assert [r.rel for r in s.rows] == [EQ]
    assert fc_feasible(types[0], types, 1, 1) is not None


def test_exclusion_pair_is_infeasible_when_forced():
    hi, lo = K(1, F(3, 4), P), K(1, F(3, 4), Not(P))
    c = finite_closure(conj(hi, lo))
    types = enumerate_types(c)
    assert not with_members(types, hi, lo)
    base = with_members(types, hi, Not(lo))[0]
    forced = base.mask & ~(1 << c.index[Not(lo)]) | (1 << c.index[lo])
    gamma = TypeCandidate(c, forced)
    assert hi in gamma and lo in gamma
    assert fc_feasible(gamma, types, 1, resolve_k_size(None, c)) is None


# -- elimination --------------------------------------------------------------------------------------

def test_nothing_to_eliminate_for_atom():
    c, types = types_of("p")
    elim = iterate_elimination(c, 1)
    assert elim.survivors == types
    assert elim.trace.eliminated == []
    assert emit_star_axioms(elim.trace) == []


def test_single_coordinate_removes_negative_kv():
    c, types = types_of("Kv_1^{3/5}(t)")
    elim = iterate_elimination(c, 1)
    (neg,) = with_members(types, Not(KV))
    assert neg in elim.trace.stages[0].surviving
    assert neg not in elim.trace.stages[1].surviving
    assert [e.type for e in elim.trace.eliminated] == [neg]
    assert emit_star_axioms(elim.trace) == [Not(Not(KV))]


def test_two_coordinates_keep_both_kv_types():
    c, types = types_of("Kv_1^{3/5}(t)")
    elim = iterate_elimination(c, 2)
    assert set(elim.survivors) == set(types)
    (neg,) = with_members(types, Not(KV))
    sol = elim.solutions[(neg, 1)]
    (s,) = build_fc(neg, elim.survivors, 1, 2)
    assert check_witness(s, sol)
    fibers = [sum(q for (mask, f), q in sol.items() if f == (k,)) for k in (1, 2)]
    assert all(x < F(3, 5) for x in fibers)


def test_star_axioms_follow_trace_order():
    c = finite_closure(parse("(~Kv_1^{3/5}(t) | ~Kv_2^{3/4}(t))"))
    elim = iterate_elimination(c, 1)
    entries = elim.trace.eliminated
    assert len(entries) >= 2
    assert emit_star_axioms(elim.trace) == [Not(conj_all(e.profile)) for e in entries]
    assert entries[0].agent == 1


def test_lindenbaum_examples():
    c, types = types_of("p")
    assert lindenbaum(P, c, types).members == (P,)
    contradiction = parse("(p & ~p)")
    c = finite_closure(contradiction)
    assert lindenbaum(contradiction, c, iterate_elimination(c, 1).survivors) is None
    c = finite_closure(Not(KV))
    gamma = lindenbaum(Not(KV), c, iterate_elimination(c, 2).survivors)
    assert gamma is not None and Not(KV) in gamma
    with pytest.raises(FormulaNotInClosure):
        lindenbaum(Atom("zz"), c, [])


def check_elimination(closure, k):
    elim = iterate_elimination(closure, k)
    stages = elim.trace.stages
    for a, b in zip(stages, stages[1:]):
        assert set(b.surviving) <= set(a.surviving)
        assert set(b.surviving) == set(a.surviving) - {e.type for e in a.eliminated}
    assert stages[-1].surviving == stages[-2].surviving
    assert len(stages) <= len(stages[0].surviving) + 2
    for gamma in elim.survivors:
        for agent in closure.agents:
            sol = elim.solutions[(gamma, agent)]
            assert solution_is_normalized(sol)
            assert fc_feasible(gamma, elim.survivors, agent, k) is not None
    for star in emit_star_axioms(elim.trace):
        literals = star.sub
        for gamma in elim.survivors:
            assert not all(lit in gamma for lit in _conjuncts(literals))
    return elim


def _conjuncts(f):
    from ptkv.syntax import _as_conj

    parts = _as_conj(f)
    if parts is None:
        return [f]
    return _conjuncts(parts[0]) + _conjuncts(parts[1])


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow])
@given(small_formulas)
def test_elimination_structure(f):
    c = finite_closure(f)
    assume(small_enough(c))
    for policy in ("paper", "plus_one"):
        k = resolve_k_size(policy, c)
        if k >= 1:
            check_elimination(c, max(k, 1))
