import random
import warnings

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from cpsrisk.attack import (
    AttackNode,
    MAX_SHANNON_VARIABLES,
    ProbabilityOverflowWarning,
    and_,
    basic,
    compose_runaway,
    duplicate_ids,
    eval_approx,
    eval_exact,
    minimal_cut_sets,
    or_,
    symbolic,
    variables,
)
from cpsrisk.errors import TreeTooLarge, UnassignedVariable
from cpsrisk.polynomial import Polynomial

from oracles import poly_to_sympy, random_tree, to_sympy, truth_table_probability

P = Polynomial.parse


@pytest.fixture(scope="module")
def trees(bundle):
    return bundle.attack_trees


def test_rt_server_approx_value(trees):
    a = {"c14": 0.9, "c15": 0.8, "c16": 0.0, "c17": 0.7, "c11": 0.0, "c12": 0.0, "c13": 0.6}
    assert eval_approx(trees["rt_server"], a) == pytest.approx(0.3024, abs=1e-15)


def test_all_zero_gives_zero(trees):
    for t in trees.values():
        zero = {v: 0.0 for v in variables(t)}
        assert eval_approx(t, zero) == 0.0
        assert eval_exact(t, zero) == 0.0


def test_overflow_warning():
    t = or_(basic("a"), basic("b"))
    with pytest.warns(ProbabilityOverflowWarning):
        assert eval_approx(t, {"a": 0.8, "b": 0.8}) == pytest.approx(1.6)


def test_two_leaf_exact():
    assert eval_exact(or_(basic("a"), basic("b")), {"a": 0.5, "b": 0.5}) == 0.75
    assert eval_exact(and_(basic("a"), basic("b")), {"a": 0.5, "b": 0.5}) == 0.25


def test_hmi_exact_against_truth_table(trees):
    a = {"c5": 0.3, "c7": 0.4, "c21": 0.5, "c18": 0.2, "c19": 0.1, "c20": 0.6}
    oracle = truth_table_probability(trees["hmi"], a)
    assert oracle == pytest.approx(0.22912, abs=1e-15)
    assert eval_exact(trees["hmi"], a) == pytest.approx(oracle, abs=1e-15)


def test_unassigned_variable(trees):
    with pytest.raises(UnassignedVariable) as exc:
        eval_approx(trees["hmi"], {"c5": 0.1})
    assert "c7" in str(exc.value)


def test_shared_variable_exact():
    # AND(x, x) is just x; OR(x, AND(x, y)) absorbs to x
    x = basic("x")
    assert eval_exact(and_(x, basic("x", id="x2")), {"x": 0.3}) == pytest.approx(0.3)
    assert eval_exact(or_(x, and_(basic("x", id="x2"), basic("y"))), {"x": 0.3, "y": 0.9}) == pytest.approx(0.3)


def test_too_many_repeated_variables():
    n = MAX_SHANNON_VARIABLES + 1
    names = [f"v{i}" for i in range(n)]
    t = and_(or_(*[basic(v, id=f"a{v}") for v in names]), or_(*[basic(v, id=f"b{v}") for v in names]))
    with pytest.raises(TreeTooLarge):
        eval_exact(t, {v: 0.1 for v in names})


def test_symbolic_rt_server(trees):
    assert symbolic(trees["rt_server"]) == P("c14 c15 c16 c11 c12 + c14 c15 c16 c13 + c14 c15 c17 c11 c12 + c14 c15 c17 c13")


def test_symbolic_hmi(trees):
    assert symbolic(trees["hmi"]) == P("c5 c7 + c21 c18 + c21 c19 c20")


def test_symbolic_basic():
    assert str(symbolic(basic("x"))) == "x"


def test_symbolic_matches_sympy_on_bundled(trees):
    for t in trees.values():
        assert poly_to_sympy(symbolic(t)) == sympy.expand(to_sympy(t))


def test_substitution_examples(trees):
    assert symbolic(trees["rt_server"]).substitute({"c12": 0, "c16": 0}) == P("c13 c14 c15 c17")
    assert symbolic(trees["bpcs"]).substitute({"c9": 0, "a2": 0, "c4": 0}) == P("c8 c5 + c8 c6")
    assert symbolic(trees["hmi"]).substitute({"c20": 0}) == P("c5 c7 + c18 c21")


def test_compose_runaway():
    server, bpcs, hmi = P("c13 c14 c15 c17"), P("c8 (c5 + c6)"), P("c5 c7 + c18 c21")
    expected = sympy.expand(poly_to_sympy(server) * (poly_to_sympy(bpcs) + poly_to_sympy(hmi)))
    assert poly_to_sympy(compose_runaway(server, bpcs, hmi)) == expected
    assert compose_runaway(Polynomial(), bpcs, hmi).is_zero()
    assert compose_runaway(server, Polynomial(), Polynomial()).is_zero()


def test_compose_runaway_as_printed():
    server, bpcs, hmi = P("c13 c14 c15 c17"), P("c8 (c5 + c6)"), P("c5 c7 + c18 c21")
    printed = compose_runaway(server, bpcs, hmi, as_printed=True)
    assert printed == P("c13 c14 c15 c17 (c8 (c5 + c6) + c5 c7 + c8 c21)")


def test_cut_sets():
    assert minimal_cut_sets(or_(basic("a"), and_(basic("b"), basic("c")))) == [
        frozenset("a"), frozenset("bc")]
    assert minimal_cut_sets(basic("x")) == [frozenset("x")]


def test_hmi_cut_sets(trees):
    assert minimal_cut_sets(trees["hmi"]) == [
        frozenset({"c5", "c7"}), frozenset({"c18", "c21"}), frozenset({"c19", "c20", "c21"})]


def test_duplicate_ids_detected():
    t = and_(basic("a", id="n"), basic("b", id="n"))
    assert duplicate_ids(t) == ["n"]


def test_gate_invariants():
    with pytest.raises(ValueError):
        basic("")
    with pytest.raises(ValueError):
        AttackNode("BASIC", (basic("a"),), "x")
    with pytest.raises(ValueError):
        AttackNode("AND", (basic("a"),), "x")


seeds = st.integers(0, 2**32 - 1)


def _assignment(rng, tree):
    return {v: rng.random() for v in variables(tree)}


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_exact_matches_truth_table(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, n_vars=8)
    a = _assignment(rng, tree)
    assert eval_exact(tree, a) == pytest.approx(truth_table_probability(tree, a), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_approx_bounds_exact_on_read_once_trees(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, n_vars=12, read_once=True)
    a = _assignment(rng, tree)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProbabilityOverflowWarning)
        approx = eval_approx(tree, a)
    exact = eval_exact(tree, a)
    assert 0.0 <= exact <= 1.0
    assert approx >= exact - 1e-12


def test_approx_can_undershoot_with_repeated_and():
    # the rare-event form squares a variable repeated under AND
    t = and_(basic("x"), basic("x", id="x2"))
    assert eval_approx(t, {"x": 0.5}) < eval_exact(t, {"x": 0.5})


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(["approx", "exact"]))
def test_symbolic_evaluates_like_tree(seed, semantics):
    rng = random.Random(seed)
    tree = random_tree(rng, n_vars=6, max_depth=4)
    a = _assignment(rng, tree)
    poly = symbolic(tree, semantics)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProbabilityOverflowWarning)
        direct = eval_approx(tree, a) if semantics == "approx" else eval_exact(tree, a)
    assert poly.evaluate(a) == pytest.approx(direct, abs=1e-12, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_cut_set_soundness(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, n_vars=6, max_depth=4)
    names = variables(tree)
    for cs in minimal_cut_sets(tree):
        a = {v: 1.0 if v in cs else 0.0 for v in names}
        assert eval_exact(tree, a) == 1.0
        for drop in cs:
            b = dict(a, **{drop: 0.0})
            assert eval_exact(tree, b) == 0.0


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_gap_shrinks_quadratically(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, n_vars=12, read_once=True)
    a = _assignment(rng, tree)
    gaps = []
    for k in range(1, 5):
        s = {v: p * 10.0**-k for v, p in a.items()}
        gaps.append(eval_approx(tree, s) - eval_exact(tree, s))
    for g0, g1 in zip(gaps, gaps[1:]):
        assert g1 >= -1e-300
        if g0 > 0:
            assert g1 / g0 <= 10**-1.9
