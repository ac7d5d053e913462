import random

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from helpers import (compose_oracle, group_oracle, orbit_oracle, random_action,
                     random_sparse_action)
from rfaction.groups import (ActionError, ClosureBudgetExceeded, FiniteAction,
                             GroupPresentation, Permutation, Subgroup, Word,
                             closure, evaluate_word, format_word, free_reduce,
                             orbits, parse_cycles, parse_word, stabilizer,
                             subgroup_contains)

letters = st.lists(st.tuples(st.integers(0, 2), st.sampled_from((1, -1))), max_size=20)
perms = st.integers(1, 8).flatmap(lambda n: st.permutations(list(range(n))))


def test_free_reduce_examples():
    assert free_reduce([(0, 1), (0, -1)]) == Word()
    assert free_reduce([(0, 1), (1, 1), (1, -1), (0, 1)]) == Word([(0, 1), (0, 1)])
    w = [(0, 1), (1, 1), (0, -1)]
    assert tuple(free_reduce(w)) == tuple(w)


@given(letters)
def test_free_reduce_idempotent_and_reduced(ls):
    w = free_reduce(ls)
    assert free_reduce(w) == w
    for (g, s), (h, t) in zip(w, w[1:]):
        assert not (g == h and s == -t)


@given(letters, letters)
def test_word_product_matches_reduced_concatenation(a, b):
    assert Word(a) * Word(b) == free_reduce(list(a) + list(b))
    assert (Word(a) * Word(a).inverse()) == Word()


def test_word_text_round_trip():
    w = parse_word("a b A")
    assert tuple(w) == ((0, 1), (1, 1), (0, -1))
    assert format_word(w) == "a b A"
    assert parse_word("1") == Word()
    assert format_word(Word()) == "1"


def test_presentation_validation():
    with pytest.raises(ValueError):
        GroupPresentation(1, (Word([(1, 1)]),))
    with pytest.raises(ValueError):
        GroupPresentation(1, (Word(),))


def test_evaluate_word_examples():
    a = FiniteAction.free(3, [parse_cycles("(0 1)", 3)])
    assert evaluate_word(Word(), a).is_identity()
    assert evaluate_word(parse_word("a"), a) == parse_cycles("(0 1)", 3)
    c = FiniteAction.free(3, [parse_cycles("(0 1 2)", 3)])
    expect = compose_oracle([1, 2, 0], [1, 2, 0])
    assert list(evaluate_word(parse_word("a a"), c).images) == expect
    assert evaluate_word(parse_word("a a"), c) == parse_cycles("(0 2 1)", 3)


def test_evaluate_word_rightmost_letter_acts_first():
    a = FiniteAction.free(3, [parse_cycles("(0 1)", 3), parse_cycles("(1 2)", 3)])
    p = evaluate_word(parse_word("a b"), a)
    # b first sends 1 to 2, then a leaves 2 alone
    assert p[1] == 2
    assert p == a.generator_images[0] * a.generator_images[1]


def test_evaluate_word_bad_index():
    a = FiniteAction.free(2, [parse_cycles("(0 1)", 2)])
    with pytest.raises((IndexError, ValueError)):
        evaluate_word(Word([(3, 1)]), a)


@settings(max_examples=60)
@given(st.integers(0, 2**32), letters, letters)
def test_evaluate_word_is_homomorphism(seed, u, v):
    rng = random.Random(seed)
    a = random_action(rng, rng.randint(1, 9), 3)
    wu, wv = Word(u), Word(v)
    assert evaluate_word(wu * wv, a) == evaluate_word(wu, a) * evaluate_word(wv, a)


def test_action_relators_checked():
    pres = GroupPresentation(1, (parse_word("a a"),))
    FiniteAction(pres, 3, (parse_cycles("(0 1)", 3),))
    with pytest.raises(ActionError):
        FiniteAction(pres, 3, (parse_cycles("(0 1 2)", 3),))


def test_permutation_algebra():
    p = parse_cycles("(0 1 2)(3 4)", 5)
    assert p.order() == 6
    assert p * p.inverse() == Permutation.identity(5)
    assert (p**6).is_identity()
    assert p.to_cycle_string() == "(0 1 2)(3 4)"
    assert Permutation.identity(3).to_cycle_string() == "()"
    assert parse_cycles("(0 1)(2 3)").degree >= 4
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])


@given(perms, st.data())
def test_permutation_composition_matches_oracle(p, data):
    q = data.draw(st.permutations(list(range(len(p)))))
    assert list((Permutation(p) * Permutation(q)).images) == compose_oracle(p, q)


def test_orbit_examples():
    assert orbits(FiniteAction.free(3, [Permutation.identity(3)])) == [(0,), (1,), (2,)]
    assert orbits(FiniteAction.free(3, [parse_cycles("(0 1)", 3)])) == [(0, 1), (2,)]
    a = FiniteAction.free(4, [parse_cycles("(0 1)(2 3)", 4), parse_cycles("(1 2)", 4)])
    assert orbits(a) == [(0, 1, 2, 3)]
    assert orbit_oracle([g.images for g in a.generator_images], 4, 0) == {0, 1, 2, 3}


@settings(max_examples=60)
@given(st.integers(0, 2**32))
def test_orbits_match_bfs_and_closure_generators(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 10)
    a = random_action(rng, n, rng.randint(0, 3))
    gens = [g.images for g in a.generator_images]
    for orb in orbits(a):
        assert set(orb) == orbit_oracle(gens, n, orb[0])
    assert [o[0] for o in orbits(a)] == sorted(o[0] for o in orbits(a))
    # replacing the generators by the whole closure does not change orbits
    if n <= 7:
        full = FiniteAction.free(n, sorted(closure(a.generator_images, n)))
        assert orbits(full) == orbits(a)


def test_stabilizer_examples():
    e = FiniteAction.free(3, [Permutation.identity(3)])
    assert stabilizer(e, 1).order() == 1
    z2 = FiniteAction.free(3, [parse_cycles("(0 1)", 3)])
    assert stabilizer(z2, 2).order() == 2
    s3 = FiniteAction.free(3, [parse_cycles("(0 1 2)", 3), parse_cycles("(0 1)", 3)])
    h = stabilizer(s3, 0)
    fixers = {g for g in group_oracle([(1, 2, 0), (1, 0, 2)], 3) if g[0] == 0}
    assert {g.images for g in h.elements()} == fixers
    assert h.elements() == frozenset({Permutation.identity(3), parse_cycles("(1 2)", 3)})


@settings(max_examples=60)
@given(st.integers(0, 2**32))
def test_orbit_stabilizer_identity(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 12)
    if n <= 8:
        a = random_action(rng, n, rng.randint(1, 3))
    else:
        # short cycles keep most images of 12 points within budget
        a = random_sparse_action(rng, n, rng.randint(1, 3))
    try:
        g = len(closure(a.generator_images, n))
    except ClosureBudgetExceeded:
        assume(False)
    if n <= 6:
        assert g == len(group_oracle([p.images for p in a.generator_images], n))
    for orb in orbits(a):
        for e in orb:
            h = stabilizer(a, e)
            assert len(orb) * h.order() == g
            assert all(p.fixes(e) for p in h.elements())


def test_closure_budget():
    gens = [parse_cycles("(0 1 2 3 4 5 6)", 7), parse_cycles("(0 1)", 7)]
    with pytest.raises(ClosureBudgetExceeded):
        closure(gens, 7, budget=100)


def test_subgroup_contains_examples():
    triv = Subgroup(3, ())
    t = Subgroup(3, (parse_cycles("(1 2)", 3),))
    assert subgroup_contains(t, triv)
    assert not subgroup_contains(triv, t)
    assert subgroup_contains(t, Subgroup(3, (parse_cycles("(1 2)", 3),)))
    with pytest.raises(ValueError):
        subgroup_contains(t, Subgroup(4, ()))


def test_subgroup_closure_is_a_group():
    h = Subgroup(4, (parse_cycles("(0 1 2 3)", 4),))
    els = h.elements()
    assert Permutation.identity(4) in els
    assert all(a * b in els and a.inverse() in els for a in els for b in els)
    assert h.is_cyclic()
