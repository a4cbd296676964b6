import itertools
import json
import random
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ptkv.errors import BadRational, ModelFormatError, UnknownTerm, UnknownWorld
from ptkv.model import (
    ProbModel,
    event_value,
    extension,
    fiber_masses,
    intro_model,
    kv_exists,
    kv_unique,
    make_model,
    random_model,
    satisfies,
    valid_in_model,
    validate,
)
from ptkv.syntax import Atom, Eq, Imp, K, Kv, Not, conj, disj, iff, parse

from strategies import formulas, k_thresholds, kv_thresholds, models, small_formulas

P = Atom("p")


def naive_holds(m, w, f):
    """Direct recursive reading of the semantics, one world at a time."""
    if isinstance(f, Atom):
        return m.valuation.get((w, f.name), False)
    if isinstance(f, Eq):
        return m.term_values[(w, f.left)] == m.term_values[(w, f.right)]
    if isinstance(f, Not):
        return not naive_holds(m, w, f.sub)
    if isinstance(f, Imp):
        return (not naive_holds(m, w, f.left)) or naive_holds(m, w, f.right)
    dist = m.measures[(f.agent, w)]
    if isinstance(f, K):
        return sum(q for u, q in dist.items() if naive_holds(m, u, f.sub)) >= f.theta
    heavy = 0
    for d in m.domain:
        if sum(q for u, q in dist.items() if m.term_values[(u, f.term)] == d) >= f.eta:
            heavy += 1
    return heavy == 1


def subsets(xs):
    return [set(c) for r in range(len(xs) + 1) for c in itertools.combinations(xs, r)]


# -- validation ----------------------------------------------------------------------

def test_point_mass_model_is_valid():
    m = make_model(["w"], ["d"], {(1, "w"): {"w": 1}}, {}, {("w", "t"): "d"})
    assert validate(m) == []


def test_bad_sum_reported():
    m = make_model(["w1", "w2"], ["d"], {(1, "w1"): {"w1": "1/2", "w2": "1/3"}, (1, "w2"): {"w2": 1}})
    problems = validate(m)
    assert any("sum = 5/6 != 1" in p for p in problems)


def test_missing_term_value_reported():
    m = make_model(["w1"], ["d"], {(1, "w1"): {"w1": 1}})
    problems = validate(m, [Kv(1, Fraction(3, 5), "t")])
    assert any("missing term value" in p for p in problems)


def test_other_violations_reported():
    m = make_model(
        ["w1"],
        ["d"],
        {(1, "w1"): {"w1": Fraction(3, 2), "w9": Fraction(-1, 2)}, (2, "w8"): {"w1": 1}},
        {},
        {("w1", "t"): "e"},
    )
    text = "\n".join(validate(m))
    for needle in ("negative mass", "unknown world w9", "unknown world w8", "not in domain", "no measure at world w1"):
        assert needle in text


# -- fibers ----------------------------------------------------------------------------

def test_constant_term_fibers():
    worlds = ["w1", "w2", "w3"]
    m = make_model(worlds, ["d1", "d2"], {(1, w): {w: 1} for w in worlds}, {}, {(w, "t"): "d1" for w in worlds})
    assert event_value(m, "t", "d1") == frozenset(worlds)
    assert event_value(m, "t", "d2") == frozenset()


@given(models, st.sampled_from(["t", "s", "u"]))
def test_fibers_partition_worlds(m, t):
    fibers = [event_value(m, t, d) for d in m.domain]
    assert frozenset().union(*fibers) == frozenset(m.worlds)
    for a, b in itertools.combinations(fibers, 2):
        assert not a & b


def test_missing_term_value_raises():
    m = make_model(["w1"], ["d"], {(1, "w1"): {"w1": 1}})
    with pytest.raises(UnknownTerm):
        extension(m, Eq("t", "t"))


# -- extension and satisfaction -------------------------------------------------------

def test_excluded_middle_is_everywhere():
    m = intro_model()
    assert extension(m, disj(P, Not(P))) == frozenset(m.worlds)


@given(models, formulas)
def test_negation_is_complement(m, f):
    assert extension(m, Not(f)) == frozenset(m.worlds) - extension(m, f)


@given(models, formulas)
def test_extension_matches_naive_semantics(m, f):
    ext = extension(m, f)
    assert ext == frozenset(w for w in m.worlds if naive_holds(m, w, f))


def test_intro_value_fiber():
    m = intro_model()
    assert event_value(m, "t", "d1") == {"w1"}
    assert extension(m, Eq("t", "t")) == frozenset(m.worlds)


def test_intro_attacker_knows_value():
    assert satisfies(intro_model(), "w1", parse("Kv_1^{3/5}(t)"))


def test_intro_attacker_split_posterior():
    m = intro_model(("42/100", "37/100", "21/100"))
    assert not satisfies(m, "w1", parse("Kv_1^{3/5}(t)"))


@given(models, formulas, st.integers(1, 2))
def test_k_zero_always_holds(m, f, agent):
    assert valid_in_model(m, K(agent, 0, f))


def test_satisfies_unknown_world():
    with pytest.raises(UnknownWorld):
        satisfies(intro_model(), "w9", P)


@given(models)
def test_validity_examples(m):
    assert valid_in_model(m, disj(P, Not(P)))
    assert valid_in_model(m, Eq("t", "t"))


def test_varying_atom_not_valid():
    m = make_model(["w1", "w2"], ["d"], {(1, w): {w: 1} for w in ("w1", "w2")}, {("w1", "p"): True})
    assert not valid_in_model(m, P)


# -- measure lemmas ---------------------------------------------------------------------

@given(models, st.data())
def test_measure_monotone(m, data):
    agent = data.draw(st.sampled_from(m.agents))
    w = data.draw(st.sampled_from(m.worlds))
    y = set(data.draw(st.lists(st.sampled_from(m.worlds), unique=True)))
    x = {u for u in y if data.draw(st.booleans())}
    assert m.mass(agent, w, x) <= m.mass(agent, w, y)


@given(models, st.data())
def test_null_set_equality(m, data):
    agent = data.draw(st.sampled_from(m.agents))
    w = data.draw(st.sampled_from(m.worlds))
    dist = m.measures[(agent, w)]
    null = [u for u in m.worlds if u not in dist]
    x = set(data.draw(st.lists(st.sampled_from(m.worlds), unique=True)))
    flip = set(data.draw(st.lists(st.sampled_from(null), unique=True))) if null else set()
    y = x ^ flip
    assert m.mass(agent, w, x) == m.mass(agent, w, y)


@settings(max_examples=300)
@given(models, kv_thresholds, st.sampled_from(["t", "s", "u"]))
def test_high_threshold_existence_is_uniqueness(m, eta, t):
    for agent in m.agents:
        for w in m.worlds:
            assert kv_exists(m, agent, w, t, eta) == kv_unique(m, agent, w, t, eta)


def test_half_threshold_breaks_uniqueness():
    m = make_model(
        ["w1", "w2"],
        ["d1", "d2"],
        {(1, w): {"w1": "1/2", "w2": "1/2"} for w in ("w1", "w2")},
        {},
        {("w1", "t"): "d1", ("w2", "t"): "d2"},
    )
    half = Fraction(1, 2)
    assert fiber_masses(m, 1, "w1", "t") == {"d1": half, "d2": half}
    assert kv_exists(m, 1, "w1", "t", half)
    assert not kv_unique(m, 1, "w1", "t", half)


# -- semantic propositions --------------------------------------------------------------

@given(models, kv_thresholds, kv_thresholds, st.sampled_from(["t", "s"]))
def test_kv_monotone(m, a, b, t):
    zeta, eta = sorted((a, b))
    for agent in m.agents:
        hi, lo = extension(m, Kv(agent, eta, t)), extension(m, Kv(agent, zeta, t))
        assert hi <= lo


@given(models, k_thresholds, k_thresholds, small_formulas)
def test_k_monotone(m, a, b, f):
    theta, theta2 = sorted((a, b))
    assert extension(m, K(1, theta2, f)) <= extension(m, K(1, theta, f))


@given(models, k_thresholds, k_thresholds, small_formulas, small_formulas)
def test_implication_propagation(m, alpha, beta, f, g):
    gamma = max(Fraction(0), alpha + beta - 1)
    both = extension(m, K(1, alpha, Imp(f, g))) & extension(m, K(1, beta, f))
    assert both <= extension(m, K(1, gamma, g))


@given(models, k_thresholds, k_thresholds, small_formulas)
def test_exclusion(m, alpha, beta, f):
    assume(alpha + beta > 1)
    assert not extension(m, K(2, alpha, f)) & extension(m, K(2, beta, Not(f)))


@given(models, k_thresholds, k_thresholds, small_formulas, small_formulas)
def test_additivity_under_probability_one_disjointness(m, alpha, beta, f, g):
    assume(alpha + beta <= 1)
    premise = (
        extension(m, K(1, alpha, f))
        & extension(m, K(1, beta, g))
        & extension(m, K(1, 1, Not(conj(f, g))))
    )
    assert premise <= extension(m, K(1, alpha + beta, disj(f, g)))


@given(models, k_thresholds, k_thresholds, small_formulas)
def test_additivity_for_valid_disjointness(m, alpha, beta, f):
    assume(alpha + beta <= 1)
    g = Not(f)
    premise = extension(m, K(1, alpha, f)) & extension(m, K(1, beta, g))
    assert premise <= extension(m, K(1, alpha + beta, disj(f, g)))


@given(models, k_thresholds, kv_thresholds)
def test_substitution_under_certain_equality(m, theta, eta):
    sure = extension(m, K(1, 1, Eq("t", "s")))
    assert sure <= extension(m, iff(K(1, theta, Eq("t", "u")), K(1, theta, Eq("s", "u"))))
    assert sure <= extension(m, iff(Kv(1, eta, "t"), Kv(1, eta, "s")))


@given(models, k_thresholds, small_formulas, small_formulas)
def test_substitution_under_certain_equivalence(m, theta, f, g):
    sure = extension(m, K(2, 1, iff(f, g)))
    assert sure <= extension(m, iff(K(2, theta, f), K(2, theta, g)))


# -- JSON --------------------------------------------------------------------------------

@given(models)
def test_json_round_trip(m):
    back = ProbModel.loads(m.dumps())
    assert back.to_json() == m.to_json()
    text = json.dumps(m.to_json())
    assert "." not in "".join(
        q for rows in m.to_json()["measures"].values() for dist in rows.values() for q in dist.values()
    )
    assert text == json.dumps(back.to_json())


def test_json_rejects_bad_rationals():
    data = intro_model().to_json()
    data["measures"]["agent:1"]["w1"]["w1"] = "1/0"
    with pytest.raises(BadRational):
        ProbModel.from_json(data)
    data["measures"]["agent:1"]["w1"]["w1"] = "abc"
    with pytest.raises(BadRational):
        ProbModel.from_json(data)


def test_json_rejects_bad_shape():
    with pytest.raises(ModelFormatError):
        ProbModel.from_json({"domain": []})
    with pytest.raises(ModelFormatError):
        ProbModel.from_json({"worlds": ["w"], "domain": ["d"], "measures": {"bob": {}}})


def test_random_model_respects_bounds():
    for seed in range(200):
        m = random_model(random.Random(seed))
        assert 1 <= len(m.worlds) <= 4 and 1 <= len(m.domain) <= 3
        assert validate(m) == []
