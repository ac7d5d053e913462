"""Seeded generators and brute-force oracles shared by the test modules.

The oracles here deliberately avoid the library's own algorithms: orbits
are found by breadth-first search over images, groups by naive products,
R-components by a hand-rolled union-find over all pairs.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from rfaction.groups import FiniteAction, GroupPresentation, Permutation, Word
from rfaction.spaces import ProfiniteSpace, tree_space


def compose_oracle(p, q):
    """``p after q`` as plain lists."""
    return [p[q[i]] for i in range(len(q))]


def group_oracle(gens, degree):
    ident = tuple(range(degree))
    els = {ident}
    changed = True
    while changed:
        changed = False
        for g in list(els):
            for s in gens:
                h = tuple(s[g[i]] for i in range(degree))
                if h not in els:
                    els.add(h)
                    changed = True
    return els


def orbit_oracle(gens, degree, x):
    seen = {x}
    todo = [x]
    while todo:
        y = todo.pop()
        for g in gens:
            z = g[y]
            if z not in seen:
                seen.add(z)
                todo.append(z)
            # inverse images too
            for w in range(degree):
                if g[w] == y and w not in seen:
                    seen.add(w)
                    todo.append(w)
    return seen


def components_oracle(matrix, R):
    n = len(matrix)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for i in range(n):
        for j in range(n):
            if matrix[i][j] < R:
                a, b = find(i), find(j)
                if a != b:
                    parent[a] = b
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(v) for v in groups.values())


def random_permutation(rng, degree):
    images = list(range(degree))
    rng.shuffle(images)
    return Permutation(images)


def random_action(rng, degree, gens):
    return FiniteAction.free(degree, [random_permutation(rng, degree) for _ in range(gens)])


def random_sparse_action(rng, degree, gens):
    """Generators that are products of few short cycles, so images stay small."""
    imgs = []
    for _ in range(gens):
        pts = rng.sample(range(degree), rng.randint(0, min(degree, 4)))
        images = list(range(degree))
        for a, b in zip(pts, pts[1:] + pts[:1]):
            images[a] = b
        imgs.append(Permutation(images))
    return FiniteAction.free(degree, imgs)


def tree_automorphism(space: ProfiniteSpace, branching, portrait) -> Permutation:
    """Deepest-level permutation of a tree from a portrait.

    ``portrait[(level, vertex)]`` permutes the children of ``vertex``
    (``level`` 0 is the root, vertex 0); missing entries are identities.
    """
    D = len(branching)
    images = []
    for x in range(space.size(D)):
        digits = []
        y = x
        for b in reversed(branching):
            digits.append(y % b)
            y //= b
        digits.reverse()
        src = 0
        dst = 0
        for k, (b, d) in enumerate(zip(branching, digits)):
            sigma = portrait.get((k, src))
            e = sigma[d] if sigma is not None else d
            dst = dst * b + e
            src = src * b + d
        images.append(dst)
    return Permutation(images)


def random_portrait(rng, branching, from_level=0, density=1.0):
    """Random child permutations at every vertex of level ``>= from_level``."""
    portrait = {}
    count = 1
    for k, b in enumerate(branching):
        if k >= from_level:
            for v in range(count):
                if rng.random() < density:
                    perm = list(range(b))
                    rng.shuffle(perm)
                    portrait[(k, v)] = perm
        count *= b
    return portrait


def random_tree(rng, max_branching=3, max_depth=5, max_points=243):
    while True:
        depth = rng.randint(1, max_depth)
        branching = [rng.randint(1, max_branching) for _ in range(depth)]
        total = 1
        for b in branching:
            total *= b
        if 2 <= total <= max_points:
            break
    scale = [Fraction(1, 2**k) for k in range(depth)]
    return branching, tree_space(branching, scale)


def random_tree_action(rng, branching, space, gens):
    maps = [tree_automorphism(space, branching, random_portrait(rng, branching, density=rng.random()))
            for _ in range(gens)]
    return maps


def ultrametric_matrix_oracle(space: ProfiniteSpace, depth):
    """Cylinder distances by comparing explicit paths."""
    paths = [space.path(x, depth) for x in range(space.size(depth))]
    out = []
    for p in paths:
        row = []
        for q in paths:
            d = Fraction(0)
            for n, (a, b) in enumerate(zip(p, q)):
                if a != b:
                    d = space.scale[n]
                    break
            row.append(d)
        out.append(row)
    return out


def word_from(rng, gens, length):
    return Word((rng.randrange(gens), rng.choice((1, -1))) for _ in range(length))


def cyclic_presentation(order):
    return GroupPresentation(1, (Word([(0, 1)] * order),))


def all_int_matrices(n, bound):
    for entries in itertools.product(range(-bound, bound + 1), repeat=n * n):
        yield tuple(tuple(entries[i * n:(i + 1) * n]) for i in range(n))


def automorphism_oracle(l):
    """Every integer matrix in a box whose size comes from the gram diagonal and its inverse."""
    n = l.dimension
    den = math.lcm(*(x.denominator for row in l.gram for x in row))
    G = np.array([[int(x * den) for x in row] for row in l.gram], dtype=np.int64)
    bound = max(math.isqrt(math.ceil(l.gram[j][j] * l.gram_inverse[k][k])) + 1
                for j in range(n) for k in range(n))
    rng = np.arange(-bound, bound + 1)
    grid = np.array(list(itertools.product(rng, repeat=n * n)), dtype=np.int64).reshape(-1, n, n)
    prod = np.einsum("kai,ab,kbj->kij", grid, G, grid)
    keep = np.all(prod == G, axis=(1, 2))
    return sorted(tuple(tuple(int(v) for v in row) for row in M) for M in grid[keep])


def brute_dimension(a):
    """Count the basis {delta_x u_g} of C(E) x| G as pairs, then the block sum by hand."""
    group = group_oracle([g.images for g in a.generator_images], a.set_size)
    total = a.set_size * len(group)
    blocks = 0
    seen = set()
    for e in range(a.set_size):
        if e in seen:
            continue
        orbit = {g[e] for g in group}
        seen |= orbit
        fixers = sum(1 for g in group if g[e] == e)
        blocks += len(orbit) ** 2 * fixers
    return total, blocks


CORPUS = Path(__file__).resolve().parent.parent / "corpus"

# (arguments, expected exit status) for every corpus-driven CLI run
CORPUS_RUNS = [
    (["build-odometer", "--space", "line4.metric", "--action", "line4.action"], 0),
    (["build-odometer", "--space", "line4_with_action.metric", "--action", "line4.action",
      "--thresholds", "6,1"], 0),
    (["build-odometer", "--space", "adding3.profinite", "--action", "adding3_deep.action"], 0),
    (["build-odometer", "--space", "binary3.profinite", "--action", "binary3_swap.action"], 0),
    (["torus-residue", "--lattice", "square.lattice", "--generators", "quarter_turn.generators",
      "--epsilon", "1/2"], 0),
    (["torus-residue", "--lattice", "hexagonal.lattice", "--generators", "flip_standin.generators",
      "--epsilon", "1/2"], 0),
    (["analyze-action", "--action", "z2_on_3.action"], 0),
    (["analyze-action", "--action", "s3.action"], 0),
    (["analyze-action", "--levels", "adding3.levels"], 0),
    (["verify-residue", "--residue", "line4_coarse.residue", "--space", "line4_with_action.metric"], 0),
    (["verify-residue", "--residue", "line4_fails.residue", "--space", "line4_with_action.metric"], 1),
    (["verify-residue", "--residue", "adding3_level2.residue", "--space", "adding3.levels"], 0),
    (["verify-residue", "--residue", "quarter_turn.residue", "--space", "quarter_turn.torus",
      "--witness", "torus_witness.points"], 0),
    (["repair-action", "--presentation", "involution.presentation", "--space", "binary4.profinite",
      "--generators", "perturbed_swap.action"], 0),
]


def corpus_argv(args):
    """Resolve corpus file names in an argument list to absolute paths."""
    out = []
    for a in args:
        out.append(str(CORPUS / a) if (CORPUS / a).is_file() else a)
    return out
