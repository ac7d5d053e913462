"""Repairing almost actions on profinite spaces into exact actions.

An *almost action* assigns to each generator of a finitely presented group
a level-preserving automorphism of a finite rooted tree (the deepest level
of a :class:`ProfiniteSpace`), without requiring the relators to hold.  If
the relators hold on the first ``N`` levels, the maps descend to an honest
action there; acting by that action on the top ``N`` coordinates and by the
identity on the remaining coordinates gives an exact action within ``r_N``
of the original maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .groups import (FiniteAction, GroupPresentation, Permutation,
                     evaluate_on, format_word)
from .spaces import (LevelAction, ProfiniteSpace, level_action_from_deep,
                     level_permutations)


class DescendError(ValueError):
    """A relator is not the identity at the requested level."""

    def __init__(self, msg, relator=None, level=None, point=None):
        super().__init__(msg)
        self.relator = relator
        self.level = level
        self.point = point


class RepairError(ValueError):
    pass


class AlmostAction:
    """Generator maps on the deepest level of ``space``; relators may fail."""

    def __init__(self, space: ProfiniteSpace, presentation: GroupPresentation,
                 generator_maps: Sequence[Permutation]):
        maps = tuple(generator_maps)
        if len(maps) != presentation.generator_count:
            raise ValueError(f"{len(maps)} maps for {presentation.generator_count} generators")
        self.space = space
        self.presentation = presentation
        self.generator_maps = maps
        # raises unless every map is a tree automorphism
        self.level_maps = [level_permutations(space, p) for p in maps]

    @property
    def depth(self) -> int:
        return self.space.depth

    def level_images(self, n: int) -> tuple[Permutation, ...]:
        return tuple(lm[n - 1] for lm in self.level_maps)

    def __repr__(self):
        return f"AlmostAction(levels={self.space.level_sizes}, generators={len(self.generator_maps)})"


def _displacement(space: ProfiniteSpace, p: Permutation, q: Permutation | None = None) -> Fraction:
    """``max_x d(p x, q x)`` on the deepest level (``q`` defaults to the identity)."""
    D = space.depth
    anc = space.ancestors(D)
    worst = None
    for x in range(space.size(D)):
        a = p[x]
        b = x if q is None else q[x]
        if a == b:
            continue
        for n in range(1, D + 1):
            if anc[n - 1][a] != anc[n - 1][b]:
                if worst is None or n < worst:
                    worst = n
                break
        if worst == 1:
            break
    return Fraction(0) if worst is None else space.scale[worst - 1]


def relator_defect(aa: AlmostAction) -> tuple[Fraction, ...]:
    """``max_x d(w x, x)`` for each relator ``w`` on the deepest level."""
    D = aa.depth
    out = []
    for r in aa.presentation.relators:
        w = evaluate_on(r, aa.generator_maps, aa.space.size(D))
        out.append(_displacement(aa.space, w))
    return tuple(out)


def descend_level(aa: AlmostAction, level: int) -> FiniteAction:
    """The honest action induced on ``level``, if every relator holds there."""
    if not 1 <= level <= aa.depth:
        raise ValueError(f"level {level} outside 1..{aa.depth}")
    imgs = aa.level_images(level)
    m = aa.space.size(level)
    for r in aa.presentation.relators:
        w = evaluate_on(r, imgs, m)
        for x in range(m):
            if w[x] != x:
                raise DescendError(f"relator {format_word(r)} moves point {x} of level {level}",
                                   r, level, x)
    return FiniteAction(aa.presentation, m, imgs)


def descends(aa: AlmostAction, level: int) -> bool:
    try:
        descend_level(aa, level)
    except DescendError:
        return False
    return True


def homogeneity_witness(space: ProfiniteSpace, level: int) -> tuple[int, int] | None:
    """``(n, x)``: a vertex at level ``n >= level`` whose child count differs from its peers."""
    for n in range(level, space.depth):
        counts = [0] * space.size(n)
        for b in space.bonding_maps[n - 1]:
            counts[b] += 1
        for x, c in enumerate(counts):
            if c != counts[0]:
                return n, x
    return None


@dataclass(frozen=True, eq=False)
class RepairResult:
    exact_action: LevelAction
    level_used: int
    distance_bound: Fraction
    measured_distance: Fraction
    relator_defects: tuple[Fraction, ...]


def _fiber_coordinates(space: ProfiniteSpace, level: int):
    """Deepest-level point <-> (level-``level`` ancestor, child ranks below it)."""
    D = space.depth
    rank_at = []
    for n in range(level, D):
        seen: dict[int, int] = {}
        ranks = []
        for b in space.bonding_maps[n - 1]:
            ranks.append(seen.get(b, 0))
            seen[b] = seen.get(b, 0) + 1
        rank_at.append(ranks)
    anc = space.ancestors(D)
    coords = []
    for x in range(space.size(D)):
        path = [int(anc[n - 1][x]) for n in range(1, D + 1)]
        tail = tuple(rank_at[n - level][path[n]] for n in range(level, D))
        coords.append((path[level - 1], tail))
    index = {c: x for x, c in enumerate(coords)}
    return coords, index


def repair(aa: AlmostAction, level: int) -> RepairResult:
    """Replace each generator by its level-``level`` action times the identity on fibers."""
    alpha = descend_level(aa, level)
    space = aa.space
    w = homogeneity_witness(space, level)
    if w is not None:
        n, x = w
        raise RepairError(f"fibers below level {level} are not isomorphic: vertex {x} of "
                          f"level {n} has a different number of children")
    coords, index = _fiber_coordinates(space, level)
    deep = []
    for a in alpha.generator_images:
        deep.append(Permutation([index[(a[top], tail)] for top, tail in coords]))
    la = level_action_from_deep(space, aa.presentation, deep)
    measured = max((_displacement(space, p, q) for p, q in zip(deep, aa.generator_maps)),
                   default=Fraction(0))
    bound = space.scale[level - 1]
    if measured > bound:
        raise AssertionError(f"repaired maps move points by {measured} > {bound}")
    return RepairResult(la, level, bound, measured, relator_defect(aa))


@dataclass(frozen=True, eq=False)
class ScheduleEntry:
    index: int
    level: int | None
    distance_bound: Fraction | None
    result: RepairResult | None
    relator_defects: tuple[Fraction, ...]

    @property
    def repaired(self) -> bool:
        return self.result is not None


def deepest_descent(aa: AlmostAction) -> int | None:
    for n in range(aa.depth, 0, -1):
        if descends(aa, n):
            return n
    return None


def repair_schedule(seq: Sequence[AlmostAction]) -> list[ScheduleEntry]:
    """Repair each almost action at the deepest level where it descends."""
    out = []
    for i, aa in enumerate(seq):
        n = deepest_descent(aa)
        if n is None:
            out.append(ScheduleEntry(i, None, None, None, relator_defect(aa)))
            continue
        res = repair(aa, n)
        out.append(ScheduleEntry(i, n, res.distance_bound, res, res.relator_defects))
    return out
