import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import (components_oracle, random_tree, random_tree_action)
from rfaction.groups import FiniteAction, Permutation, orbits, parse_cycles
from rfaction.odometer import (IsometryError, block_diameter, build_odometer,
                               check_conjugacy, distance_schedule,
                               induced_action, is_minimal, r_components)
from rfaction.spaces import (adding_machine, check_metric, halving_scale,
                             tree_space, truncate)

LINE = [0, 1, 5, 6]


def line(points):
    return check_metric([[F(abs(a - b)) for b in points] for a in points])


def reflection():
    # x -> 6 - x swaps the clusters {0, 1} and {5, 6}
    return FiniteAction.free(4, [parse_cycles("(0 3)(1 2)", 4)])


def test_r_components_examples():
    m = line(LINE)
    assert r_components(m, 7).blocks == ((0, 1, 2, 3),)
    assert r_components(m, 1).blocks == ((0,), (1,), (2,), (3,))
    part = r_components(m, 2)
    assert part.blocks == ((0, 1), (2, 3))
    assert list(part.blocks) == components_oracle(m.matrix(), 2)


def test_r_components_strict_threshold():
    m = line([0, 2, 4])
    assert len(r_components(m, 2)) == 3
    assert len(r_components(m, F(201, 100))) == 1


@settings(max_examples=60)
@given(st.integers(0, 2**32))
def test_r_components_match_union_find_and_refine(seed):
    rng = random.Random(seed)
    pts = rng.sample(range(100), rng.randint(1, 12))
    m = line(pts)
    Rs = sorted({F(rng.randint(1, 40), rng.randint(1, 3)) for _ in range(4)}, reverse=True)
    parts = [r_components(m, R) for R in Rs]
    for R, part in zip(Rs, parts):
        assert list(part.blocks) == components_oracle(m.matrix(), R)
        for i, b in enumerate(part.blocks):
            for c in part.blocks[i + 1:]:
                assert all(m.dist(x, y) >= R for x in b for y in c)
    for coarse, fine in zip(parts, parts[1:]):
        for b in fine.blocks:
            assert len({coarse.block_map[x] for x in b}) == 1


@settings(max_examples=40)
@given(st.integers(0, 2**32))
def test_ultrametric_blocks_are_balls(seed):
    rng = random.Random(seed)
    _, p = random_tree(rng, max_points=64)
    m = truncate(p, p.depth)
    for R in p.scale + (F(3, 2),):
        part = r_components(m, R)
        for b in part.blocks:
            for x in b:
                assert set(b) == {y for y in range(m.size) if m.dist(x, y) < R}


def test_induced_action_examples():
    m = line(LINE)
    a = reflection()
    single = r_components(m, 1)
    assert induced_action(m, a, single).generator_images == a.generator_images
    one = r_components(m, 10)
    assert induced_action(m, a, one).generator_images == (Permutation.identity(1),)
    two = induced_action(m, a, r_components(m, 2))
    assert two.generator_images == (parse_cycles("(0 1)", 2),)


def test_induced_action_rejects_non_isometry_with_witness():
    m = line(LINE)
    bad = FiniteAction.free(4, [parse_cycles("(0 2)(1 3)", 4)])
    with pytest.raises(IsometryError) as info:
        induced_action(m, bad, r_components(m, 2))
    g, x, y = info.value.witness
    p = bad.generator_images[g]
    assert m.dist(x, y) != m.dist(p[x], p[y])


def test_build_odometer_examples():
    m = line(LINE)
    a = reflection()
    o = build_odometer(m, a, (7, 1))
    assert o.level_sizes() == (1, 4)
    b = tree_space([2, 2, 2], halving_scale(3))
    t = truncate(b, 3)
    o = build_odometer(t, FiniteAction.free(8, [Permutation.identity(8)]), (1, F(1, 2), F(1, 4)))
    assert o.level_sizes() == (2, 4, 8)
    assert o.space.scale == (1, F(1, 2), F(1, 4))


def test_build_odometer_rejects_bad_thresholds():
    m = line(LINE)
    with pytest.raises(ValueError):
        build_odometer(m, reflection(), (2, 2, 1))
    with pytest.raises(ValueError):
        build_odometer(m, reflection(), (6, 2))


def test_distance_schedule_is_distinct_values_descending():
    assert distance_schedule(line(LINE)) == (6, 5, 4, 1)


@settings(max_examples=40)
@given(st.integers(0, 2**32))
def test_odometer_equivariance_and_recovery(seed):
    rng = random.Random(seed)
    branching, p = random_tree(rng, max_points=81)
    maps = random_tree_action(rng, branching, p, rng.randint(1, 3))
    m = truncate(p, p.depth)
    a = FiniteAction.free(m.size, maps)
    o = build_odometer(m, a, distance_schedule(m))
    assert o.action.actions[-1].generator_images == a.generator_images
    sp = o.space
    for n in range(1, o.depth):
        bond = sp.bonding_maps[n - 1]
        for hi, lo in zip(o.action.level(n + 1).generator_images, o.action.level(n).generator_images):
            assert all(bond[hi[x]] == lo[bond[x]] for x in range(sp.size(n + 1)))
    # composite bonding to level 1 intertwines the deepest and top actions
    D = o.depth
    top = sp.ancestors(D)[0]
    for deep, lvl1 in zip(o.action.level(D).generator_images, o.action.level(1).generator_images):
        assert all(top[deep[x]] == lvl1[top[x]] for x in range(sp.size(D)))


def test_is_minimal_examples():
    m = check_metric([[0]])
    o = build_odometer(m, FiniteAction.free(1, [Permutation.identity(1)]), (1,))
    assert is_minimal(o) == (True, None)
    two = check_metric([[0, 1], [1, 0]])
    o = build_odometer(two, FiniteAction.free(2, [Permutation.identity(2)]), (1,))
    ok, w = is_minimal(o)
    assert not ok and w == (1, 0, 1)
    for depth in range(1, 6):
        am = adding_machine(depth)
        m = truncate(am.space, depth)
        o = build_odometer(m, am.level(depth), am.space.scale)
        assert is_minimal(o) == (True, None)
        assert all(len(orbits(x)) == 1 for x in o.action.actions)


def test_check_conjugacy_examples():
    m = line(LINE)
    a = reflection()
    o = build_odometer(m, a, (7, 2, 1))
    assert check_conjugacy(o, m, a, 3) == 0
    assert check_conjugacy(o, m, a, 1) <= m.diameter() < 7
    d2 = check_conjugacy(o, m, a, 2)
    assert d2 < 2
    # exhaustive recomputation over generators and points
    part = r_components(m, 2)
    rep = [b[0] for b in part.blocks]
    g = a.generator_images[0]
    brute = max(m.dist(rep[part.block_map[g[x]]], g[rep[part.block_map[x]]]) for x in range(4))
    assert d2 == brute


def test_check_conjugacy_bounded_by_block_diameter():
    # on a non-ultrametric line a component can be wider than its threshold
    m = line(LINE)
    a = reflection()
    o = build_odometer(m, a, distance_schedule(m))
    for n in range(1, o.depth + 1):
        part = r_components(m, o.provenance[n - 1])
        assert check_conjugacy(o, m, a, n) <= block_diameter(m, part)
    with pytest.raises((ValueError, IndexError)):
        check_conjugacy(o, m, a, o.depth + 1)


@settings(max_examples=30)
@given(st.integers(0, 2**32))
def test_check_conjugacy_below_threshold_on_ultrametrics(seed):
    rng = random.Random(seed)
    branching, p = random_tree(rng, max_points=81)
    maps = random_tree_action(rng, branching, p, rng.randint(1, 2))
    m = truncate(p, p.depth)
    a = FiniteAction.free(m.size, maps)
    ts = distance_schedule(m)
    o = build_odometer(m, a, ts)
    for n in range(1, o.depth + 1):
        assert check_conjugacy(o, m, a, n) < ts[n - 1]
