import itertools
import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import automorphism_oracle
from rfaction.groups import Permutation, parse_word
from rfaction.residue import verify_residue
from rfaction.torus import (CopyGenerator, FlatTorus, Lattice, LatticePointSet,
                            PointBudgetExceeded, SearchRadiusError,
                            TorusAmbient, TorusError, TorusIsometry,
                            build_orbit_closure_residue, build_torus_residue,
                            choose_modulus, compose, covering_radius_sq,
                            decompose_isometry,
                            delta_for, grid_nearest_sq, lattice_automorphisms,
                            torus_distance, torus_sq_distance)

SQUARE = Lattice.standard(2)
HEX = Lattice([[1, F(1, 2)], [F(1, 2), 1]])
RECT7 = Lattice([[1, 0], [0, 7]])

rationals = st.fractions(min_value=0, max_value=1, max_denominator=24).map(lambda q: q % 1)


def shift_oracle(l, x, y, radius=3):
    """Exhaustive minimum of the quadratic form over all shifts in a box."""
    n = l.dimension
    G = l.gram
    best = None
    for k in itertools.product(range(-radius, radius + 1), repeat=n):
        v = [x[i] - y[i] - k[i] for i in range(n)]
        q = sum(v[i] * G[i][j] * v[j] for i in range(n) for j in range(n))
        best = q if best is None else min(best, q)
    return best


def test_lattice_validation():
    with pytest.raises(TorusError):
        Lattice([[1, 2], [2, 1]])
    with pytest.raises(TorusError):
        Lattice([[1, 0], [1, 1]])
    with pytest.raises(TorusError):
        Lattice.standard(5)
    assert Lattice.from_basis([[1, 0], [F(1, 2), 1]]).gram == ((1, F(1, 2)), (F(1, 2), F(5, 4)))


def test_torus_distance_examples():
    t = FlatTorus(SQUARE)
    assert torus_distance(t, (0, 0), (0, 0))[0] == 0
    sq, d = torus_distance(t, (0, 0), (F(3, 4), 0))
    assert sq == F(1, 16) and d == 0.25
    h = FlatTorus(HEX)
    sq, _ = torus_distance(h, (0, 0), (F(1, 2), F(1, 2)), search_radius=1)
    assert sq == shift_oracle(HEX, (0, 0), (F(1, 2), F(1, 2)), radius=1) == F(1, 4)


def test_search_radius_error():
    skew = Lattice([[1, F(9, 10)], [F(9, 10), 1]])
    t = FlatTorus(skew)
    with pytest.raises(SearchRadiusError):
        # the shortest representative needs a shift outside a radius-0 box
        torus_distance(t, (0, 0), (F(1, 2), F(1, 2)), search_radius=0)


@settings(max_examples=60)
@given(st.lists(rationals, min_size=2, max_size=2), st.lists(rationals, min_size=2, max_size=2),
       st.sampled_from([SQUARE, HEX, RECT7, Lattice([[2, 1], [1, 3]])]))
def test_torus_distance_matches_shift_oracle(x, y, lat):
    t = FlatTorus(lat)
    assert torus_sq_distance(t, x, y) == shift_oracle(lat, x, y)
    assert torus_sq_distance(t, x, y) == torus_sq_distance(t, y, x)


@settings(max_examples=30)
@given(st.lists(rationals, min_size=3, max_size=3), st.lists(rationals, min_size=3, max_size=3))
def test_torus_distance_3d_matches_oracle(x, y):
    lat = Lattice([[2, 1, 0], [1, 2, 1], [0, 1, 2]])
    assert torus_sq_distance(FlatTorus(lat), x, y) == shift_oracle(lat, x, y, radius=2)


def test_lattice_automorphism_counts_match_oracle():
    sq = lattice_automorphisms(SQUARE)
    assert len(sq) == 8 and sq == automorphism_oracle(SQUARE)
    r7 = lattice_automorphisms(RECT7)
    assert len(r7) == 4 and r7 == automorphism_oracle(RECT7)
    assert lattice_automorphisms(Lattice([[F(3, 2)]])) == [((-1,),), ((1,),)]
    assert len(lattice_automorphisms(HEX)) == 12
    assert lattice_automorphisms(HEX) == automorphism_oracle(HEX)
    cubic = Lattice.standard(3)
    assert len(lattice_automorphisms(cubic)) == 48 == len(automorphism_oracle(cubic))


@pytest.mark.parametrize("lat", [SQUARE, HEX, RECT7, Lattice.standard(3),
                                 Lattice([[2, 1, 0], [1, 2, 1], [0, 1, 2]]),
                                 Lattice([[1, 0, 0], [0, 2, 0], [0, 0, 2]])])
def test_lattice_automorphisms_form_a_group(lat):
    auts = lattice_automorphisms(lat)
    group = set(auts)
    n = lat.dimension
    ident = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    assert ident in group
    for M in auts:
        assert lat.preserves(M)
        assert TorusIsometry.linear(M).inverse().finite_part in group
        for N in auts:
            assert compose(TorusIsometry.linear(M), TorusIsometry.linear(N)).finite_part in group


def test_decompose_examples():
    t = decompose_isometry(SQUARE, ((1, 0), (0, 1)), (F(1, 3), F(5, 4)))
    assert t.finite_part == ((1, 0), (0, 1)) and t.translation == (F(1, 3), F(1, 4))
    g = decompose_isometry(SQUARE, ((-1, 0), (0, -1)), (F(3, 2), 0))
    assert g.finite_part == ((-1, 0), (0, -1)) and g.translation == (F(1, 2), 0)
    with pytest.raises(TorusError):
        decompose_isometry(RECT7, ((0, 1), (1, 0)), (0, 0))


@settings(max_examples=60)
@given(st.data())
def test_semidirect_law(data):
    auts = lattice_automorphisms(HEX)
    f1, f2 = data.draw(st.sampled_from(auts)), data.draw(st.sampled_from(auts))
    z1 = tuple(data.draw(rationals) for _ in range(2))
    z2 = tuple(data.draw(rationals) for _ in range(2))
    x = tuple(data.draw(rationals) for _ in range(2))
    g1, g2 = TorusIsometry(f1, z1), TorusIsometry(f2, z2)
    c = compose(g1, g2)
    f1z2 = tuple(sum(f1[i][j] * z2[j] for j in range(2)) for i in range(2))
    assert c.finite_part == tuple(tuple(sum(f1[i][k] * f2[k][j] for k in range(2)) for j in range(2))
                                  for i in range(2))
    assert c.translation == tuple((a + b) % 1 for a, b in zip(z1, f1z2))
    assert c.apply(x) == g1.apply(g2.apply(x))
    assert (g1 * g1.inverse()).is_identity()
    # decomposing the composite with a translation gives z1 + f z2
    d = decompose_isometry(HEX, c.finite_part, c.translation)
    assert d == c


def test_isometries_permute_grids():
    E = LatticePointSet(6, 2)
    assert len(E) == 36
    for M in lattice_automorphisms(HEX):
        g = TorusIsometry(M, (F(1, 3), F(1, 2)))
        p = g.permutation_on(E)
        assert sorted(p.images) == list(range(36))
        for i in (0, 7, 35):
            assert E.point(p[i]) == g.apply(E.point(i))
    with pytest.raises(TorusError):
        TorusIsometry.rotation(2, 0, F(1, 5)).permutation_on(E)


def test_choose_modulus_examples():
    assert choose_modulus([(F(1, 3), False)], 1, SQUARE) == 3
    assert choose_modulus([], F(1, 10), SQUARE) == 11
    assert choose_modulus([(F(1, 2), False), (F(1, 3), False)], F(1, 7), SQUARE) == 12


@settings(max_examples=40)
@given(st.fractions(min_value=F(1, 50), max_value=1), st.fractions(0, 1, max_denominator=10**6))
def test_choose_modulus_postconditions(delta, angle):
    for flag in (False, True):
        if not flag and angle.denominator > 200:
            continue
        N = choose_modulus([(angle, flag), (F(1, 4), False)], delta, RECT7)
        assert N % 4 == 0
        if not flag:
            assert N % angle.denominator == 0
        else:
            assert abs(angle - F(round(angle * N), N)) < delta
        assert all(RECT7.gram[i][i] < delta**2 * N**2 for i in range(2))
        # minimal among multiples of the base
        base = math.lcm(4, 1 if flag else angle.denominator)
        if N > base:
            M = N - base
            ok = all(RECT7.gram[i][i] < delta**2 * M**2 for i in range(2)) and (
                not flag or abs(angle - F(round(angle * M), M)) < delta)
            assert not ok


def test_delta_rule_is_a_lower_bound():
    eps = F(1, 2)
    d = delta_for(eps, HEX)
    n = 2
    assert float(d) <= float(eps) / (2 * n * math.sqrt(n) * 2) + 1e-12


def test_quarter_turn_residue_is_exact():
    t = FlatTorus(SQUARE)
    tr = build_torus_residue(t, [TorusIsometry.rotation(2, 0, F(1, 4))], F(1, 2))
    assert tr.modulus % 4 == 0
    assert tr.max_defect_sq == 0
    assert tr.passed
    assert tr.density_radius_sq <= tr.density_bound_sq


def test_empty_generator_set_gives_a_grid():
    t = FlatTorus(SQUARE)
    tr = build_torus_residue(t, [], F(1, 2))
    assert tr.residue.action.generator_count == 0
    assert tr.residue.size == tr.modulus**2
    assert tr.passed


def test_stand_in_residue_verified_exhaustively():
    t = FlatTorus(SQUARE)
    gens = [TorusIsometry.linear(((-1, 0), (0, -1))),
            TorusIsometry.rotation(2, 1, F(355, 113), stand_in=True)]
    tr = build_torus_residue(t, gens, F(1, 5))
    assert tr.passed
    assert tr.modulus % 113 != 0
    assert tr.defect_sq[0] == 0 and 0 < tr.defect_sq[1] < F(1, 25)
    # generic per-point verification agrees with the vectorized grid check
    amb = TorusAmbient(t, gens)
    rep = verify_residue(tr.residue, amb, witnesses=[(F(1, 7), F(3, 5))])
    assert rep.max_defect_sq == tr.max_defect_sq
    assert rep.passed


def test_torus_residue_rejects_non_normal_form():
    t = FlatTorus(SQUARE)
    with pytest.raises(TorusError):
        build_torus_residue(t, [TorusIsometry.translation_by((F(1, 3), F(1, 3)))], F(1, 2))
    with pytest.raises(TorusError):
        build_torus_residue(FlatTorus(RECT7), [TorusIsometry.linear(((0, 1), (1, 0)))], F(1, 2))


def test_point_budget():
    with pytest.raises(PointBudgetExceeded):
        build_torus_residue(FlatTorus(SQUARE), [], F(1, 100), point_budget=1000)


@settings(max_examples=25)
@given(st.lists(rationals, min_size=2, max_size=2), st.integers(1, 9),
       st.sampled_from([SQUARE, HEX, RECT7]))
def test_grid_nearest_matches_exhaustive_search(x, N, lat):
    t = FlatTorus(lat)
    E = LatticePointSet(N, 2)
    brute = min(shift_oracle(lat, x, e) for e in E.points())
    assert grid_nearest_sq(t, N, x) == brute


def test_covering_radius_examples():
    assert covering_radius_sq(SQUARE) == F(1, 2)
    assert covering_radius_sq(HEX) == F(1, 3)
    assert covering_radius_sq(RECT7) == 2
    assert covering_radius_sq(Lattice.standard(3)) == F(3, 4)
    fcc = Lattice([[1, F(1, 2), F(1, 2)], [F(1, 2), 1, F(1, 2)], [F(1, 2), F(1, 2), 1]])
    assert covering_radius_sq(fcc) == F(1, 2)


@pytest.mark.parametrize("lat", [SQUARE, HEX, RECT7, Lattice([[1, F(9, 10)], [F(9, 10), 1]]),
                                 Lattice([[2, F(1, 3)], [F(1, 3), 1]])])
def test_covering_radius_matches_dense_search(lat):
    # the farthest point of a 1/M sample never beats the covering radius,
    # and reaches it when M puts a Voronoi vertex on the sample
    cr = covering_radius_sq(lat)
    M = 36
    far = max(shift_oracle(lat, (F(i, M), F(j, M)), (0, 0), radius=2)
              for i in range(M) for j in range(M))
    assert far <= cr
    assert cr - far < F(1, 50)
    if lat in (SQUARE, HEX, RECT7):
        assert far == cr


def test_density_within_bound_on_random_samples():
    rng = random.Random(5)
    for lat in (SQUARE, HEX, RECT7):
        t = FlatTorus(lat)
        tr = build_torus_residue(t, [], F(1, 2))
        for _ in range(30):
            x = tuple(F(rng.randrange(1000), 1000) for _ in range(2))
            assert grid_nearest_sq(t, tr.modulus, x) <= tr.density_radius_sq <= tr.density_bound_sq


def test_orbit_closure_single_copy_reduces_to_grid_residue():
    t = FlatTorus(SQUARE)
    g = TorusIsometry.rotation(2, 0, F(1, 3))
    a = build_orbit_closure_residue(t, [CopyGenerator.from_isometry(g)], 1, F(1, 2))
    b = build_torus_residue(t, [g], F(1, 2))
    assert a.residue == b.residue and a.modulus == b.modulus


def test_orbit_closure_swapped_copies():
    t = FlatTorus(SQUARE)
    swap = Permutation([1, 0])
    g = CopyGenerator(swap, ((1, 0), (0, 1)), (0, 0))
    tr = build_orbit_closure_residue(t, [g], 2, F(1, 2))
    N = tr.modulus
    assert tr.residue.size == 2 * N * N
    assert tr.max_defect_sq == 0 and tr.passed
    p = tr.residue.action.generator_images[0]
    assert all(tr.residue.labels[p[i]][0] != tr.residue.labels[i][0] for i in range(tr.residue.size))


def test_orbit_closure_swap_with_rotation_verified_on_both_copies():
    from rfaction.torus import DisjointToriAmbient
    t = FlatTorus(SQUARE)
    g = CopyGenerator(Permutation([1, 0]), ((1, 0), (0, 1)), (F(1, 3), F(1, 3)))
    tr = build_orbit_closure_residue(t, [g], 2, F(1, 2))
    assert tr.modulus % 3 == 0
    assert tr.max_defect_sq == 0 and tr.passed
    amb = DisjointToriAmbient(t, 2, [g])
    wit = [(c, (F(1, 5), F(2, 7))) for c in range(2)]
    rep = verify_residue(tr.residue, amb, witnesses=wit)
    assert rep.max_defect_sq == 0 and rep.passed
    assert rep.density_radius_sq <= tr.density_bound_sq


def test_orbit_closure_rejects_bad_inputs():
    t = FlatTorus(SQUARE)
    g = CopyGenerator(Permutation([1, 0, 2]), ((1, 0), (0, 1)), (0, 0))
    with pytest.raises(TorusError):
        build_orbit_closure_residue(t, [g], 2, F(1, 2))
    a = CopyGenerator(Permutation([1, 2, 0]), ((1, 0), (0, 1)), (F(1, 2), 0))
    b = CopyGenerator(Permutation([1, 0, 2]), ((1, 0), (0, 1)), (0, F(1, 2)))
    with pytest.raises(TorusError, match="commute"):
        build_orbit_closure_residue(t, [a, b], 3, F(1, 2))


def test_word_action_on_torus_ambient():
    t = FlatTorus(SQUARE)
    r = TorusIsometry.rotation(2, 0, F(1, 4))
    amb = TorusAmbient(t, [r])
    assert amb.act(parse_word("a a A"), (0, 0)) == (F(1, 4), 0)
