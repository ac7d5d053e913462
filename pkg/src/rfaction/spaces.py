"""Finite metric spaces, profinite (inverse-limit) spaces and level actions.

A :class:`FiniteMetricSpace` stores its distances as a table of distinct
exact values plus an integer matrix of indices into that table.  Comparisons
between distances are therefore integer comparisons, which keeps partition
and isometry checks cheap on a few hundred points.

A :class:`ProfiniteSpace` is an inverse sequence of finite sets
``level 1 <- level 2 <- ... <- level L``.  Levels are numbered from 1 in the
public API; ``bonding_maps[n - 1]`` sends level ``n + 1`` onto level ``n``.
A point at depth ``D`` is a coherent path ``(x_1, ..., x_D)``; the distance
between two paths is ``scale[n - 1]`` where ``n`` is the first level at which
they differ.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .groups import (DEFAULT_CLOSURE_BUDGET, FiniteAction, Permutation,
                     closure)


class MetricError(ValueError):
    """A candidate distance matrix is not a metric."""


class ProfiniteError(ValueError):
    """Malformed inverse sequence or incoherent path."""


class EquivarianceError(ValueError):
    """A level action does not commute with the bonding maps.

    ``witness`` is ``(generator, level, point)``: the generator whose image
    at ``level + 1`` disagrees, after bonding, with its image at ``level``
    on ``point`` of level ``level + 1``.
    """

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass exact rationals")
    return Fraction(x)


class FiniteMetricSpace:
    """Points ``0..size-1`` with exact rational distances."""

    __slots__ = ("values", "ranks")

    def __init__(self, values: Sequence[Fraction], ranks: np.ndarray):
        # values strictly increasing, values[0] == 0; caller guarantees axioms
        ranks = np.asarray(ranks, dtype=np.int64)
        used = np.unique(ranks)
        if len(used) != len(values):
            remap = np.zeros(len(values), dtype=np.int64)
            remap[used] = np.arange(len(used))
            ranks = remap[ranks]
            values = [values[i] for i in used.tolist()]
        self.values = tuple(values)
        self.ranks = ranks
        self.ranks.setflags(write=False)

    @property
    def size(self) -> int:
        return self.ranks.shape[0]

    def dist(self, x: int, y: int) -> Fraction:
        return self.values[self.ranks[x, y]]

    def matrix(self) -> tuple[tuple[Fraction, ...], ...]:
        v = self.values
        return tuple(tuple(v[r] for r in row) for row in self.ranks.tolist())

    def distance_values(self) -> tuple[Fraction, ...]:
        """Distinct positive distances, increasing."""
        return self.values[1:]

    def diameter(self) -> Fraction:
        return self.values[-1]

    def min_distance(self) -> Fraction | None:
        return self.values[1] if len(self.values) > 1 else None

    def rank_below(self, r: Fraction) -> int:
        """Number of table values strictly less than ``r``."""
        import bisect
        return bisect.bisect_left(self.values, r)

    def is_isometry(self, p: Permutation) -> bool:
        return isometry_witness(self, p) is None

    def is_ultrametric(self) -> bool:
        R = self.ranks
        for y in range(self.size):
            bound = np.maximum(R[:, y][:, None], R[y, :][None, :])
            if np.any(R > bound):
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self.values == other.values and np.array_equal(self.ranks, other.ranks)

    def __hash__(self):
        return hash((self.values, self.ranks.tobytes()))

    def __repr__(self):
        return f"FiniteMetricSpace(size={self.size}, diameter={self.diameter()})"


def _rank_encode(matrix):
    vals = sorted({x for row in matrix for x in row})
    if not vals or vals[0] != 0:
        vals = [Fraction(0)] + vals
    index = {v: i for i, v in enumerate(vals)}
    ranks = np.array([[index[x] for x in row] for row in matrix], dtype=np.int64).reshape(
        len(matrix), len(matrix))
    return vals, ranks


def check_metric(matrix: Sequence[Sequence]) -> FiniteMetricSpace:
    """Validate a square matrix as a metric and return the space.

    Raises :class:`MetricError` naming the first violated pair or triple.
    """
    n = len(matrix)
    rows = []
    for i, row in enumerate(matrix):
        if len(row) != n:
            raise MetricError(f"row {i} has length {len(row)}, expected {n}")
        rows.append([as_fraction(x) for x in row])
    for i in range(n):
        for j in range(n):
            d = rows[i][j]
            if d < 0:
                raise MetricError(f"negative entry d({i},{j}) = {d}")
            if d != rows[j][i]:
                raise MetricError(f"asymmetric: d({i},{j}) = {d} but d({j},{i}) = {rows[j][i]}")
            if (d == 0) != (i == j):
                raise MetricError(f"d({i},{j}) = {d} violates identity of indiscernibles")
    vals, ranks = _rank_encode(rows)
    witness = _triangle_witness(vals, ranks)
    if witness is not None:
        x, y, z = witness
        raise MetricError(f"triangle violation: d({x},{z}) = {rows[x][z]} > "
                          f"d({x},{y}) + d({y},{z}) = {rows[x][y] + rows[y][z]}")
    return FiniteMetricSpace(vals, ranks)


def _triangle_witness(vals, ranks):
    n = ranks.shape[0]
    den = 1
    for v in vals:
        den = den * v.denominator // np.gcd(den, v.denominator)
    ints = [int(v * den) for v in vals]
    if ints[-1] < 2**61:
        table = np.array(ints, dtype=np.int64)
        D = table[ranks]
        for y in range(n):
            bad = D > (D[:, y][:, None] + D[y, :][None, :])
            if bad.any():
                x, z = np.argwhere(bad)[0]
                return int(x), y, int(z)
        return None
    D = [[ints[r] for r in row] for row in ranks.tolist()]
    for x, y, z in itertools.product(range(n), repeat=3):
        if D[x][z] > D[x][y] + D[y][z]:
            return x, y, z
    return None


def isometry_witness(m: FiniteMetricSpace, p: Permutation) -> tuple[int, int] | None:
    """A pair ``(x, y)`` with ``d(px, py) != d(x, y)``, or ``None``."""
    if p.degree != m.size:
        raise ValueError(f"permutation degree {p.degree} differs from space size {m.size}")
    idx = np.array(p.images, dtype=np.int64)
    bad = m.ranks[np.ix_(idx, idx)] != m.ranks
    if bad.any():
        x, y = np.argwhere(bad)[0]
        return int(x), int(y)
    return None


def average_metric(m: FiniteMetricSpace, a: FiniteAction,
                   budget: int = DEFAULT_CLOSURE_BUDGET) -> FiniteMetricSpace:
    """Average ``m`` over the finite image group of ``a``.

    ``d'(x, y) = (1/|G|) * sum over g in G of d(gx, gy)``.  The result is
    invariant under every element of ``G``.  A zero off-diagonal average
    cannot happen for a genuine metric, but is reported rather than assumed.
    """
    if a.set_size != m.size:
        raise ValueError("action and space have different sizes")
    group = sorted(closure(a.generator_images, m.size, budget))
    n = m.size
    vals = m.values
    total = [[Fraction(0)] * n for _ in range(n)]
    for g in group:
        gi = g.images
        for x in range(n):
            row = m.ranks[gi[x]]
            tx = total[x]
            for y in range(n):
                tx[y] += vals[row[gi[y]]]
    k = len(group)
    avg = [[t / k for t in row] for row in total]
    for x in range(n):
        for y in range(n):
            if x != y and avg[x][y] == 0:
                raise MetricError(f"averaged distance d'({x},{y}) is zero")
    vals2, ranks2 = _rank_encode(avg)
    return FiniteMetricSpace(vals2, ranks2)


# ---------------------------------------------------------------------------
# profinite spaces


@dataclass(frozen=True, eq=False)
class ProfiniteSpace:
    """Inverse sequence of finite sets with surjective bonding maps."""

    level_sizes: tuple[int, ...]
    bonding_maps: tuple[tuple[int, ...], ...]
    scale: tuple[Fraction, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.level_sizes)
        bonds = tuple(tuple(int(x) for x in b) for b in self.bonding_maps)
        scale = tuple(as_fraction(r) for r in self.scale)
        object.__setattr__(self, "level_sizes", sizes)
        object.__setattr__(self, "bonding_maps", bonds)
        object.__setattr__(self, "scale", scale)
        L = len(sizes)
        if L == 0:
            raise ProfiniteError("a profinite space needs at least one level")
        if any(s <= 0 for s in sizes):
            raise ProfiniteError("level sizes must be positive")
        if len(bonds) != L - 1:
            raise ProfiniteError(f"{L} levels need {L - 1} bonding maps, got {len(bonds)}")
        if len(scale) != L:
            raise ProfiniteError(f"{L} levels need {L} scale values, got {len(scale)}")
        if any(r <= 0 for r in scale):
            raise ProfiniteError("scale values must be positive")
        if any(a <= b for a, b in zip(scale, scale[1:])):
            raise ProfiniteError("scale must be strictly decreasing")
        for n, b in enumerate(bonds, start=1):
            if len(b) != sizes[n]:
                raise ProfiniteError(f"bonding map {n + 1}->{n} has {len(b)} entries, "
                                     f"level {n + 1} has {sizes[n]} points")
            if any(not 0 <= x < sizes[n - 1] for x in b):
                raise ProfiniteError(f"bonding map {n + 1}->{n} leaves level {n}")
            if len(set(b)) != sizes[n - 1]:
                missing = min(set(range(sizes[n - 1])) - set(b))
                raise ProfiniteError(f"bonding map {n + 1}->{n} is not surjective "
                                     f"(misses point {missing})")

    @property
    def depth(self) -> int:
        return len(self.level_sizes)

    def size(self, level: int) -> int:
        return self.level_sizes[level - 1]

    def bond(self, level: int, x: int) -> int:
        """Image in ``level - 1`` of point ``x`` of ``level``."""
        return self.bonding_maps[level - 2][x]

    def project(self, x: int, from_level: int, to_level: int) -> int:
        for n in range(from_level, to_level, -1):
            x = self.bonding_maps[n - 2][x]
        return x

    def ancestors(self, level: int) -> list[np.ndarray]:
        """``out[n-1][x]`` is the level-``n`` image of level-``level`` point ``x``."""
        cur = np.arange(self.size(level))
        out = [cur]
        for n in range(level, 1, -1):
            cur = np.asarray(self.bonding_maps[n - 2], dtype=np.int64)[cur]
            out.append(cur)
        return out[::-1]

    def path(self, x: int, depth: int) -> tuple[int, ...]:
        """The coherent path ending at point ``x`` of level ``depth``."""
        out = [x]
        for n in range(depth, 1, -1):
            x = self.bonding_maps[n - 2][x]
            out.append(x)
        return tuple(reversed(out))

    def paths(self, depth: int) -> list[tuple[int, ...]]:
        return [self.path(x, depth) for x in range(self.size(depth))]

    def check_path(self, path: Sequence[int]) -> None:
        if not 1 <= len(path) <= self.depth:
            raise ProfiniteError(f"path length {len(path)} outside 1..{self.depth}")
        for n, x in enumerate(path, start=1):
            if not 0 <= x < self.size(n):
                raise ProfiniteError(f"path entry {x} outside level {n}")
            if n > 1 and self.bond(n, x) != path[n - 2]:
                raise ProfiniteError(f"incoherent path {tuple(path)!r} at level {n}")

    def preimages(self, level: int, x: int) -> list[int]:
        """Points of ``level + 1`` over point ``x`` of ``level``, increasing."""
        return [y for y, b in enumerate(self.bonding_maps[level - 1]) if b == x]

    def least_lift(self, path: Sequence[int], depth: int) -> tuple[int, ...]:
        """Extend a coherent path to ``depth`` choosing the least preimage each time."""
        out = list(path)
        for n in range(len(out), depth):
            out.append(self.bonding_maps[n - 1].index(out[-1]))
        return tuple(out)

    def __eq__(self, other):
        if not isinstance(other, ProfiniteSpace):
            return NotImplemented
        return (self.level_sizes, self.bonding_maps, self.scale) == (
            other.level_sizes, other.bonding_maps, other.scale)

    def __hash__(self):
        return hash((self.level_sizes, self.bonding_maps, self.scale))


def tree_space(branching: Sequence[int], scale: Sequence) -> ProfiniteSpace:
    """Spherically homogeneous rooted tree; level ``n`` has ``b_1 * ... * b_n`` points.

    Point ``x`` of level ``n + 1`` lies over ``x // b_{n+1}`` of level ``n``.
    """
    sizes = list(itertools.accumulate(branching, lambda a, b: a * b))
    bonds = [tuple(x // branching[n + 1] for x in range(sizes[n + 1]))
             for n in range(len(sizes) - 1)]
    return ProfiniteSpace(tuple(sizes), tuple(bonds), tuple(scale))


def halving_scale(depth: int) -> tuple[Fraction, ...]:
    """``(1, 1/2, 1/4, ...)``."""
    return tuple(Fraction(1, 2**k) for k in range(depth))


def profinite_metric(p: ProfiniteSpace, x: Sequence[int], y: Sequence[int]) -> Fraction:
    """Cylinder ultrametric between two coherent paths of equal depth."""
    if len(x) != len(y):
        raise ProfiniteError("paths have different depths")
    p.check_path(x)
    p.check_path(y)
    for n, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return p.scale[n]
    return Fraction(0)


def first_difference(p: ProfiniteSpace, level: int, x: int, y: int) -> int | None:
    """First level (1-based) where points ``x``, ``y`` of ``level`` differ."""
    if x == y:
        return None
    px, py = p.path(x, level), p.path(y, level)
    for n, (a, b) in enumerate(zip(px, py), start=1):
        if a != b:
            return n
    return level


def truncate(p: ProfiniteSpace, depth: int) -> FiniteMetricSpace:
    """Level ``depth`` with the cylinder ultrametric."""
    if not 1 <= depth <= p.depth:
        raise ProfiniteError(f"depth {depth} outside 1..{p.depth}")
    anc = p.ancestors(depth)
    m = p.size(depth)
    # values table: 0, r_depth, ..., r_1  (increasing)
    values = (Fraction(0),) + tuple(reversed(p.scale[:depth]))
    ranks = np.zeros((m, m), dtype=np.int64)
    for n in range(depth, 0, -1):
        a = anc[n - 1]
        differ = a[:, None] != a[None, :]
        ranks[differ] = depth - n + 1
    return FiniteMetricSpace(values, ranks)


# ---------------------------------------------------------------------------
# level actions


def equivariance_witness(space: ProfiniteSpace, actions: Sequence[FiniteAction]):
    """First ``(generator, level, point)`` breaking ``bond . g_{n+1} = g_n . bond``."""
    for n in range(1, len(actions)):
        bond = space.bonding_maps[n - 1]
        lo, hi = actions[n - 1], actions[n]
        for g, (pl, ph) in enumerate(zip(lo.generator_images, hi.generator_images)):
            for x in range(space.size(n + 1)):
                if bond[ph[x]] != pl[bond[x]]:
                    return g, n, x
    return None


class LevelAction:
    """One :class:`FiniteAction` per level, all over the same presentation."""

    __slots__ = ("space", "actions")

    def __init__(self, space: ProfiniteSpace, actions: Sequence[FiniteAction], check: bool = True):
        actions = tuple(actions)
        if len(actions) != space.depth:
            raise ProfiniteError(f"{len(actions)} level actions for {space.depth} levels")
        pres = actions[0].presentation
        for n, a in enumerate(actions, start=1):
            if a.set_size != space.size(n):
                raise ProfiniteError(f"level {n} action has size {a.set_size}, "
                                     f"level has {space.size(n)} points")
            if a.presentation != pres:
                raise ProfiniteError("level actions use different presentations")
        self.space = space
        self.actions = actions
        if check:
            w = equivariance_witness(space, actions)
            if w is not None:
                g, n, x = w
                raise EquivarianceError(
                    f"generator {g} is not equivariant between levels {n + 1} and {n} "
                    f"at point {x}", w)

    @property
    def presentation(self):
        return self.actions[0].presentation

    @property
    def depth(self) -> int:
        return len(self.actions)

    def level(self, n: int) -> FiniteAction:
        return self.actions[n - 1]

    def act_path(self, word, path: Sequence[int]) -> tuple[int, ...]:
        from .groups import evaluate_word
        return tuple(evaluate_word(word, self.actions[n])[x] for n, x in enumerate(path))

    def __eq__(self, other):
        if not isinstance(other, LevelAction):
            return NotImplemented
        return self.space == other.space and self.actions == other.actions

    def __hash__(self):
        return hash((self.space, self.actions))

    def __repr__(self):
        return f"LevelAction(levels={self.space.level_sizes})"


def level_permutations(space: ProfiniteSpace, deep: Permutation, depth: int | None = None) -> list[Permutation]:
    """Permutations induced on levels ``1..depth`` by a permutation of level ``depth``.

    Raises :class:`ProfiniteError` if ``deep`` does not respect the bonding
    maps, i.e. is not a level-preserving tree automorphism.
    """
    depth = space.depth if depth is None else depth
    if deep.degree != space.size(depth):
        raise ProfiniteError(f"permutation degree {deep.degree} differs from level {depth} size")
    perms = [deep]
    cur = deep.images
    for n in range(depth, 1, -1):
        bond = space.bonding_maps[n - 2]
        img = [-1] * space.size(n - 1)
        for x, y in enumerate(cur):
            bx, by = bond[x], bond[y]
            if img[bx] == -1:
                img[bx] = by
            elif img[bx] != by:
                raise ProfiniteError(f"map is not level-preserving: level {n} points over "
                                     f"{bx} go to different level {n - 1} points")
        try:
            p = Permutation(img)
        except ValueError:
            raise ProfiniteError(f"map does not induce a bijection on level {n - 1}") from None
        perms.append(p)
        cur = p.images
    return perms[::-1]


def level_action_from_deep(space: ProfiniteSpace, presentation, deep_images: Sequence[Permutation]) -> LevelAction:
    """Build a :class:`LevelAction` from level-preserving maps of the deepest level."""
    per_gen = [level_permutations(space, p) for p in deep_images]
    actions = [FiniteAction(presentation, space.size(n), tuple(pg[n - 1] for pg in per_gen))
               for n in range(1, space.depth + 1)]
    return LevelAction(space, actions)


def adding_machine(depth: int, base: int = 2, scale: Sequence | None = None) -> LevelAction:
    """The ``+1`` odometer on ``Z / base**n`` at levels ``n = 1..depth``.

    Bonding maps reduce modulo ``base**n``.
    """
    from .groups import GroupPresentation
    sizes = [base**n for n in range(1, depth + 1)]
    bonds = [tuple(x % sizes[n] for x in range(sizes[n + 1])) for n in range(depth - 1)]
    if scale is None:
        scale = tuple(Fraction(1, base**k) for k in range(depth))
    space = ProfiniteSpace(tuple(sizes), tuple(bonds), tuple(scale))
    pres = GroupPresentation.free(1)
    actions = [FiniteAction(pres, m, (Permutation([(x + 1) % m for x in range(m)]),)) for m in sizes]
    return LevelAction(space, actions)
