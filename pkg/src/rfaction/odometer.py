"""Odometers from isometric actions on finite metric spaces.

The points of a finite metric space are grouped into R-connected
components (the transitive closure of ``d(x, y) < R``).  An isometric
action permutes these components, and a decreasing schedule of thresholds
gives a nested sequence of partitions; the induced actions on the blocks
form an inverse sequence whose deepest level is the original action.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .groups import FiniteAction, Permutation, orbits
from .spaces import (FiniteMetricSpace, LevelAction, ProfiniteSpace,
                     as_fraction, equivariance_witness, isometry_witness)


class IsometryError(ValueError):
    """A generator does not preserve the metric; ``witness`` is ``(gen, x, y)``."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class ComponentPartition:
    threshold: Fraction
    blocks: tuple[tuple[int, ...], ...]
    block_map: tuple[int, ...]

    def representative(self, b: int) -> int:
        return self.blocks[b][0]

    def __len__(self):
        return len(self.blocks)


def r_components(m: FiniteMetricSpace, R) -> ComponentPartition:
    """Partition into classes of the transitive closure of ``d < R``.

    Blocks are sorted and ordered by their least point.
    """
    R = as_fraction(R)
    if R <= 0:
        raise ValueError("threshold must be positive")
    k = m.rank_below(R)
    adj = m.ranks < k
    _, labels = connected_components(adj, directed=False)
    # relabel by least point
    order: dict[int, int] = {}
    block_map = []
    for lab in labels.tolist():
        if lab not in order:
            order[lab] = len(order)
        block_map.append(order[lab])
    blocks = [[] for _ in order]
    for x, b in enumerate(block_map):
        blocks[b].append(x)
    return ComponentPartition(R, tuple(tuple(b) for b in blocks), tuple(block_map))


def _check_isometries(m: FiniteMetricSpace, a: FiniteAction):
    if a.set_size != m.size:
        raise ValueError(f"action on {a.set_size} points, space has {m.size}")
    for g, p in enumerate(a.generator_images):
        w = isometry_witness(m, p)
        if w is not None:
            x, y = w
            raise IsometryError(
                f"generator {g} is not an isometry: d({x},{y}) = {m.dist(x, y)} but "
                f"d({p[x]},{p[y]}) = {m.dist(p[x], p[y])}", (g, x, y))


def _block_action(a: FiniteAction, part: ComponentPartition) -> FiniteAction:
    images = []
    bm = part.block_map
    for g, p in enumerate(a.generator_images):
        img = []
        for block in part.blocks:
            targets = {bm[p[x]] for x in block}
            if len(targets) != 1:
                raise AssertionError(f"generator {g} splits block {block}")
            img.append(targets.pop())
        images.append(Permutation(img))
    return FiniteAction(a.presentation, len(part.blocks), tuple(images))


def induced_action(m: FiniteMetricSpace, a: FiniteAction, part: ComponentPartition) -> FiniteAction:
    """The action of ``a`` on the blocks of ``part``."""
    _check_isometries(m, a)
    return _block_action(a, part)


def distance_schedule(m: FiniteMetricSpace) -> tuple[Fraction, ...]:
    """All distinct positive distances, decreasing: a full threshold schedule."""
    return tuple(reversed(m.distance_values()))


@dataclass(frozen=True, eq=False)
class Odometer:
    space: ProfiniteSpace
    action: LevelAction
    provenance: tuple[Fraction, ...]
    partitions: tuple[ComponentPartition, ...]

    @property
    def depth(self) -> int:
        return self.space.depth

    def level_sizes(self) -> tuple[int, ...]:
        return self.space.level_sizes


def build_odometer(m: FiniteMetricSpace, a: FiniteAction, thresholds: Sequence) -> Odometer:
    """Inverse sequence of block actions, one level per threshold.

    The scale of the resulting profinite space is the threshold schedule
    itself, so an ultrametric input is recovered as the cylinder metric.
    """
    ts = tuple(as_fraction(t) for t in thresholds)
    if not ts:
        raise ValueError("need at least one threshold")
    if any(t <= 0 for t in ts):
        raise ValueError("thresholds must be positive")
    if any(s <= t for s, t in zip(ts, ts[1:])):
        raise ValueError(f"thresholds must be strictly decreasing: {ts}")
    dmin = m.min_distance()
    if dmin is not None and ts[-1] > dmin:
        raise ValueError(f"last threshold {ts[-1]} exceeds the minimum distance {dmin}; "
                         "the deepest level would not separate points")
    _check_isometries(m, a)
    parts = [r_components(m, R) for R in ts]
    bonds = []
    for coarse, fine in zip(parts, parts[1:]):
        bond = []
        for block in fine.blocks:
            targets = {coarse.block_map[x] for x in block}
            if len(targets) != 1:
                raise AssertionError("finer partition does not refine coarser one")
            bond.append(targets.pop())
        bonds.append(tuple(bond))
    space = ProfiniteSpace(tuple(len(p) for p in parts), tuple(bonds), ts)
    actions = [_block_action(a, p) for p in parts]
    la = LevelAction(space, actions, check=False)
    w = equivariance_witness(space, actions)
    if w is not None:
        raise AssertionError(f"constructed odometer is not equivariant at {w}")
    return Odometer(space, la, ts, tuple(parts))


def is_minimal(o: Odometer) -> tuple[bool, tuple[int, int, int] | None]:
    """Whether every level is transitive; otherwise ``(level, x, y)`` with x, y in distinct orbits."""
    for n, a in enumerate(o.action.actions, start=1):
        orbs = orbits(a)
        if len(orbs) > 1:
            return False, (n, orbs[0][0], orbs[1][0])
    return True, None


def check_conjugacy(o: Odometer, m: FiniteMetricSpace, a: FiniteAction, depth: int) -> Fraction:
    """Equivariance defect of the block-representative section at ``depth``.

    Returns ``max d(rep(block(g x)), g rep(block(x)))`` over generators and
    points, where ``rep`` is the least point of a block.  On ultrametric
    spaces this is below the level's threshold; in general it is bounded
    by the largest block diameter at that level.
    """
    if not 1 <= depth <= o.depth:
        raise IndexError(f"depth {depth} outside 1..{o.depth}")
    part = o.partitions[depth - 1]
    worst = Fraction(0)
    for p in a.generator_images:
        for x in range(m.size):
            lhs = part.blocks[part.block_map[p[x]]][0]
            rhs = p[part.blocks[part.block_map[x]][0]]
            d = m.dist(lhs, rhs)
            if d > worst:
                worst = d
    return worst


def block_diameter(m: FiniteMetricSpace, part: ComponentPartition) -> Fraction:
    best = 0
    for block in part.blocks:
        idx = np.array(block)
        best = max(best, int(m.ranks[np.ix_(idx, idx)].max()))
    return m.values[best]
