"""Residues: finite actions labelled into a space, and their verification.

A residue is a finite action ``Gamma -> Sym(E)`` together with a labelling
``zeta: E -> X``.  It is ``(eps, F)``-approximating when

* ``d(zeta(f.e), f.zeta(e)) < eps`` for every word ``f`` in ``F`` and every
  ``e`` in ``E``, and
* every point of ``X`` lies within ``eps`` of some label.

Distances are handled as exact squares so that spaces with irrational
distances (flat tori) compare against ``eps`` without rounding.  The space
together with its group action is an *ambient*; see :class:`Ambient`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from .groups import (FiniteAction, Permutation, Word,
                     evaluate_word, format_word)
from .spaces import (FiniteMetricSpace, LevelAction, ProfiniteError,
                     as_fraction, profinite_metric)


class ResidueError(ValueError):
    pass


def exact_sqrt(q) -> Fraction | None:
    """``sqrt(q)`` when it is rational, else ``None``."""
    if q == math.inf:
        return None
    q = Fraction(q)
    if q < 0:
        return None
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def sqrt_value(q):
    """Exact root when rational, otherwise a float."""
    r = exact_sqrt(q)
    return r if r is not None else math.sqrt(q)


@dataclass(frozen=True, eq=False)
class Residue:
    action: FiniteAction
    labels: tuple
    epsilon: Fraction
    words: tuple[Word, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        object.__setattr__(self, "words", tuple(w if isinstance(w, Word) else Word(w)
                                                for w in self.words))
        if len(self.labels) != self.action.set_size:
            raise ResidueError(f"{len(self.labels)} labels for a set of size {self.action.set_size}")
        if self.epsilon <= 0:
            raise ResidueError("epsilon must be positive")
        if not self.words:
            raise ResidueError("the finite word set F must be nonempty")
        for w in self.words:
            bad = [g for g in w.generators if g >= self.action.generator_count]
            if bad:
                raise ResidueError(f"word {format_word(w)} uses unknown generator {bad[0]}")

    @property
    def size(self) -> int:
        return self.action.set_size

    def with_epsilon(self, eps) -> Residue:
        return Residue(self.action, self.labels, eps, self.words)

    def with_words(self, words) -> Residue:
        return Residue(self.action, self.labels, self.epsilon, words)

    def __eq__(self, other):
        if not isinstance(other, Residue):
            return NotImplemented
        return (self.action == other.action and self.labels == other.labels
                and self.epsilon == other.epsilon and self.words == other.words)

    def __hash__(self):
        return hash((self.action, self.labels, self.epsilon, self.words))


# ---------------------------------------------------------------------------
# ambients


class Ambient:
    """A space with a metric and a group action by the same generators."""

    def sq_distance(self, x, y):
        raise NotImplementedError

    def word_map(self, word: Word) -> Callable[[Any], Any]:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return True

    def witnesses(self) -> list:
        raise ResidueError("this ambient has no default density witnesses; pass some")

    def nearest_sq(self, x, labels: Sequence):
        return min(self.sq_distance(x, z) for z in labels)

    def act(self, word: Word, x):
        return self.word_map(word)(x)

    def apply_isometry(self, iso, x):
        raise NotImplementedError


class MetricAmbient(Ambient):
    """A finite metric space with generators acting by permutations."""

    def __init__(self, space: FiniteMetricSpace, action: FiniteAction | None = None):
        if action is not None and action.set_size != space.size:
            raise ValueError("action and space sizes differ")
        self.space = space
        self.action = action

    def sq_distance(self, x, y):
        d = self.space.dist(x, y)
        return d * d

    def word_map(self, word):
        if self.action is None:
            raise ResidueError("ambient has no action")
        p = evaluate_word(word, self.action)
        return p.images.__getitem__

    def contains(self, x):
        return isinstance(x, int) and 0 <= x < self.space.size

    def witnesses(self):
        return list(range(self.space.size))

    def apply_isometry(self, iso: Permutation, x):
        return iso[x]


class ProfiniteAmbient(Ambient):
    """Depth-``D`` paths of a :class:`LevelAction` with the cylinder metric."""

    def __init__(self, level_action: LevelAction, depth: int | None = None):
        self.la = level_action
        self.depth = level_action.depth if depth is None else depth
        if not 1 <= self.depth <= level_action.depth:
            raise ValueError(f"depth {self.depth} outside 1..{level_action.depth}")

    @property
    def space(self):
        return self.la.space

    def sq_distance(self, x, y):
        d = profinite_metric(self.space, x, y)
        return d * d

    def word_map(self, word):
        perms = [evaluate_word(word, self.la.actions[n]) for n in range(self.depth)]
        return lambda path: tuple(perms[n][v] for n, v in enumerate(path))

    def contains(self, x):
        if not isinstance(x, tuple) or len(x) != self.depth:
            return False
        try:
            self.space.check_path(x)
        except ProfiniteError:
            return False
        return True

    def witnesses(self):
        return self.space.paths(self.depth)


class IsometryGroupAmbient(Ambient):
    """A group of isometries of ``base`` with the (sample-)uniform metric.

    Points are isometries (:class:`Permutation` for finite spaces,
    ``TorusIsometry`` for tori).  Generator ``i`` acts by left
    multiplication with ``generators[i]``.  The distance of ``g`` and ``h``
    is the largest displacement ``d(g y, h y)`` over ``sample``; on a finite
    space the default sample is every point, which makes it the true uniform
    metric.
    """

    def __init__(self, base: Ambient, generators: Sequence, sample: Sequence | None = None,
                 elements: Sequence | None = None):
        self.base = base
        self.generators = tuple(generators)
        self.sample = list(sample) if sample is not None else base.witnesses()
        self.elements = None if elements is None else list(elements)
        self._inverses = [g.inverse() for g in self.generators]

    def sq_distance(self, g, h):
        ap = self.base.apply_isometry
        sd = self.base.sq_distance
        return max(sd(ap(g, y), ap(h, y)) for y in self.sample)

    def word_element(self, word: Word):
        result = None
        for gen, s in reversed(word):
            f = self.generators[gen] if s > 0 else self._inverses[gen]
            result = f if result is None else f * result
        return result

    def word_map(self, word):
        w = self.word_element(word)
        if w is None:
            return lambda g: g
        return lambda g: w * g

    def witnesses(self):
        if self.elements is None:
            raise ResidueError("pass the group elements to use as density witnesses")
        return self.elements


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ResidueReport:
    max_defect_sq: Any
    density_radius_sq: Any
    epsilon: Fraction
    passed: bool
    worst_defect: tuple | None = None
    worst_density: Any = None
    witness_count: int = 0
    defect_by_word: tuple = field(default=())

    @property
    def max_defect(self):
        return sqrt_value(self.max_defect_sq)

    @property
    def density_radius(self):
        return sqrt_value(self.density_radius_sq)

    @property
    def defect_passed(self) -> bool:
        return self.max_defect_sq < self.epsilon**2

    @property
    def density_passed(self) -> bool:
        return self.density_radius_sq < self.epsilon**2


def equivariance_defect(r: Residue, ambient: Ambient, words: Sequence[Word] | None = None):
    """``(max squared defect, worst (word index, e), per-word maxima)``."""
    words = r.words if words is None else tuple(words)
    labels = r.labels
    worst = Fraction(0)
    where = None
    per_word = []
    for wi, w in enumerate(words):
        p = evaluate_word(w, r.action)
        amb = ambient.word_map(w)
        wmax = Fraction(0)
        for e in range(r.size):
            d = ambient.sq_distance(labels[p[e]], amb(labels[e]))
            if d > wmax:
                wmax = d
            if d > worst:
                worst, where = d, (wi, e)
        per_word.append(wmax)
    return worst, where, tuple(per_word)


def verify_residue(r: Residue, ambient: Ambient, witnesses: Sequence | None = None,
                   epsilon=None) -> ResidueReport:
    """Measure the equivariance defect over ``F x E`` and the density radius.

    ``witnesses`` are the points at which density is measured; by default
    every point of a finite ambient.  Passing requires both values to be
    strictly below ``epsilon`` (``r.epsilon`` unless overridden).
    """
    eps = r.epsilon if epsilon is None else as_fraction(epsilon)
    for e, z in enumerate(r.labels):
        if not ambient.contains(z):
            raise ResidueError(f"label of point {e} is not in the ambient space: {z!r}")
    wit = ambient.witnesses() if witnesses is None else list(witnesses)
    defect, where, per_word = equivariance_defect(r, ambient)
    dens = Fraction(0)
    worst_x = None
    for x in wit:
        d = ambient.nearest_sq(x, r.labels)
        if d > dens or worst_x is None:
            dens, worst_x = max(d, dens), x
    ok = defect < eps**2 and dens < eps**2
    return ResidueReport(defect, dens, eps, ok, where, worst_x, len(wit), per_word)


def verify_local_density(r: Residue, ambient: Ambient, x, epsilon=None) -> bool:
    """True iff some label lies strictly within ``epsilon`` of ``x``."""
    eps = r.epsilon if epsilon is None else as_fraction(epsilon)
    if not ambient.contains(x):
        raise ResidueError(f"{x!r} is not in the ambient space")
    e2 = eps * eps
    return any(ambient.sq_distance(x, z) < e2 for z in r.labels)


def density_from_cover(r: Residue, ambient: Ambient, centers: Sequence, epsilon=None,
                       points: Sequence | None = None) -> bool:
    """Global density from local density at the centers of a ball cover.

    Checks that the ``epsilon``-balls around ``centers`` cover ``points`` and
    that each center has a label within ``epsilon``.  When both hold, every
    point is within ``2 * epsilon`` of a label.
    """
    eps = r.epsilon if epsilon is None else as_fraction(epsilon)
    pts = ambient.witnesses() if points is None else list(points)
    e2 = eps * eps
    covered = all(any(ambient.sq_distance(x, c) < e2 for c in centers) for x in pts)
    if not covered:
        raise ResidueError("centers do not form an epsilon-cover")
    return all(verify_local_density(r, ambient, c, eps) for c in centers)


@dataclass(frozen=True)
class Filtration:
    """Residues with strictly decreasing epsilon and increasing word sets."""

    residues: tuple[Residue, ...]

    def __post_init__(self):
        rs = tuple(self.residues)
        object.__setattr__(self, "residues", rs)
        for i, (a, b) in enumerate(zip(rs, rs[1:])):
            if not b.epsilon < a.epsilon:
                raise ResidueError(f"epsilon does not decrease at position {i + 1}")
            if not set(a.words) <= set(b.words):
                raise ResidueError(f"word sets do not increase at position {i + 1}")

    def verify(self, ambient: Ambient, witnesses=None) -> list[ResidueReport]:
        return [verify_residue(r, ambient, witnesses) for r in self.residues]


# ---------------------------------------------------------------------------
# pullback and pushforward


def pullback_residue(r: Residue, la: LevelAction, level: int, depth: int) -> Residue:
    """Lift a residue on level ``level`` to depth-``depth`` paths.

    Labels are depth-``level`` paths; each is extended by the least preimage
    at every deeper level.  The new epsilon is ``max(r.epsilon, r_level)``.
    The lifted defect is checked against ``max(level defect, r_{level+1})``
    before returning.
    """
    space = la.space
    if depth < level:
        raise ResidueError(f"depth {depth} is shallower than level {level}")
    if not 1 <= level <= space.depth or depth > space.depth:
        raise ResidueError("level or depth outside the inverse sequence")
    low = ProfiniteAmbient(la, level)
    for z in r.labels:
        if not low.contains(z):
            raise ResidueError(f"label {z!r} is not a level-{level} path")
    if depth == level:
        return r
    labels = tuple(space.least_lift(z, depth) for z in r.labels)
    out = Residue(r.action, labels, max(r.epsilon, space.scale[level - 1]), r.words)
    before, _, _ = equivariance_defect(r, low)
    after, _, _ = equivariance_defect(out, ProfiniteAmbient(la, depth))
    cap = max(before, space.scale[level] ** 2)
    if after > cap:
        raise AssertionError(f"pullback defect {after} exceeds {cap}")
    return out


def _is_identity(iso) -> bool:
    return iso.is_identity()


def pushforward_residue(r: Residue, group: IsometryGroupAmbient, x) -> Residue:
    """Push a residue on an isometry group to the orbit of ``x``.

    Labels become ``zeta(e)(x)``.  Requires the identity among the labels so
    that ``x`` itself is labelled.
    """
    if not any(_is_identity(g) for g in r.labels):
        raise ResidueError("the residue labels do not contain the identity isometry")
    if not group.base.contains(x):
        raise ResidueError(f"{x!r} is not a point of the base space")
    ap = group.base.apply_isometry
    return Residue(r.action, tuple(ap(g, x) for g in r.labels), r.epsilon, r.words)


def group_residue(elements: Sequence, generators: Sequence, words=None, epsilon=1) -> Residue:
    """The exact residue of a finite isometry group acting on itself by left multiplication."""
    elements = list(elements)
    index = {g: i for i, g in enumerate(elements)}
    images = []
    for s in generators:
        try:
            images.append(Permutation([index[s * g] for g in elements]))
        except KeyError:
            raise ResidueError("elements are not closed under the generators") from None
    from .groups import GroupPresentation, generator_word
    act = FiniteAction(GroupPresentation.free(len(images)), len(elements), tuple(images))
    if words is None:
        words = [generator_word(i) for i in range(len(images))] or [Word()]
    return Residue(act, tuple(elements), epsilon, tuple(words))
