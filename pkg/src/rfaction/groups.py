"""Words, finite presentations, and permutation groups on finite sets.

Conventions
-----------
A :class:`Permutation` ``p`` sends point ``x`` to ``p[x]``.  The product
``p * q`` is function composition, ``(p * q)[x] == p[q[x]]``: ``q`` acts
first.

A :class:`Word` is a tuple of letters ``(generator, sign)``.  Words act
like composed functions, so the *rightmost* letter is applied first:
``evaluate_word(g0 g1, a) == a.images[0] * a.images[1]``.

Word text uses one lower-case letter per generator (``a`` is generator 0,
``b`` generator 1, ...) and the capital letter for its inverse, separated by
optional whitespace.  The empty word is written ``1``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

DEFAULT_CLOSURE_BUDGET = 10**5


class ClosureBudgetExceeded(RuntimeError):
    """The group generated by some permutations is larger than allowed."""


class ActionError(ValueError):
    """An action violates its presentation or is malformed."""


# ---------------------------------------------------------------------------
# words


class Word(tuple):
    """A freely reduced word; immutable tuple of ``(generator, ±1)`` letters."""

    def __new__(cls, letters: Iterable[tuple[int, int]] = ()):
        return super().__new__(cls, _reduce(letters))

    @property
    def generators(self) -> set[int]:
        return {g for g, _ in self}

    def inverse(self) -> Word:
        return Word((g, -s) for g, s in reversed(self))

    def __mul__(self, other: Word) -> Word:
        return Word(tuple(self) + tuple(other))

    def __add__(self, other):
        return self.__mul__(other)

    def __repr__(self):
        return f"Word({format_word(self)!r})"


def _reduce(letters):
    out: list[tuple[int, int]] = []
    for g, s in letters:
        g, s = int(g), int(s)
        if g < 0 or s not in (1, -1):
            raise ValueError(f"bad letter {(g, s)!r}")
        if out and out[-1][0] == g and out[-1][1] == -s:
            out.pop()
        else:
            out.append((g, s))
    return tuple(out)


def free_reduce(letters: Iterable[tuple[int, int]]) -> Word:
    """Return the freely reduced form of a letter sequence."""
    return Word(letters)


def parse_word(text: str) -> Word:
    """Parse ``"a b A"`` style text (capital letter = inverse generator)."""
    letters = []
    text = text.strip()
    if text in ("", "1"):
        return Word()
    for ch in text:
        if ch.isspace():
            continue
        if "a" <= ch <= "z":
            letters.append((ord(ch) - ord("a"), 1))
        elif "A" <= ch <= "Z":
            letters.append((ord(ch) - ord("A"), -1))
        else:
            raise ValueError(f"bad character {ch!r} in word {text!r}")
    return Word(letters)


def format_word(w: Sequence[tuple[int, int]]) -> str:
    if not w:
        return "1"
    out = []
    for g, s in w:
        if g >= 26:
            raise ValueError("word text supports at most 26 generators")
        out.append(chr((ord("a") if s > 0 else ord("A")) + g))
    return " ".join(out)


def generator_word(g: int, sign: int = 1) -> Word:
    return Word([(g, sign)])


@dataclass(frozen=True)
class GroupPresentation:
    """``<generators | relators>``; no relators means the free group."""

    generator_count: int
    relators: tuple[Word, ...] = ()

    def __post_init__(self):
        if self.generator_count < 0:
            raise ValueError("negative generator count")
        rels = tuple(r if isinstance(r, Word) else Word(r) for r in self.relators)
        for r in rels:
            if not r:
                raise ValueError("relators must be nonempty after free reduction")
            bad = [g for g in r.generators if g >= self.generator_count]
            if bad:
                raise ValueError(f"relator {format_word(r)} uses generator {bad[0]} "
                                 f"but only {self.generator_count} exist")
        object.__setattr__(self, "relators", rels)

    @classmethod
    def free(cls, generator_count: int) -> GroupPresentation:
        return cls(generator_count, ())

    @property
    def is_free(self) -> bool:
        return not self.relators


# ---------------------------------------------------------------------------
# permutations


class Permutation:
    """A bijection of ``{0, ..., m-1}`` stored as its image tuple."""

    __slots__ = ("images", "_hash")

    def __init__(self, images: Iterable[int]):
        images = tuple(int(i) for i in images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"not a permutation: {images!r}")
        self.images = images
        self._hash = hash(images)

    @classmethod
    def _trusted(cls, images: tuple[int, ...]) -> Permutation:
        p = cls.__new__(cls)
        p.images = images
        p._hash = hash(images)
        return p

    @classmethod
    def identity(cls, degree: int) -> Permutation:
        return cls._trusted(tuple(range(degree)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], degree: int | None = None) -> Permutation:
        cycles = [tuple(c) for c in cycles]
        pts = [x for c in cycles for x in c]
        if len(pts) != len(set(pts)):
            raise ValueError("cycles are not disjoint")
        need = max(pts) + 1 if pts else 0
        if degree is None:
            degree = need
        elif degree < need:
            raise ValueError(f"cycle point {need - 1} exceeds degree {degree}")
        images = list(range(degree))
        for c in cycles:
            for i, x in enumerate(c):
                images[x] = c[(i + 1) % len(c)]
        return cls._trusted(tuple(images))

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, x: int) -> int:
        return self.images[x]

    def __getitem__(self, x: int) -> int:
        return self.images[x]

    def __len__(self):
        return len(self.images)

    def __mul__(self, other: Permutation) -> Permutation:
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        a = self.images
        return Permutation._trusted(tuple(a[i] for i in other.images))

    def inverse(self) -> Permutation:
        inv = [0] * len(self.images)
        for i, v in enumerate(self.images):
            inv[v] = i
        return Permutation._trusted(tuple(inv))

    def __pow__(self, k: int) -> Permutation:
        base = self if k >= 0 else self.inverse()
        result = Permutation.identity(self.degree)
        for _ in range(abs(k)):
            result = base * result
        return result

    def is_identity(self) -> bool:
        return all(i == v for i, v in enumerate(self.images))

    def fixes(self, x: int) -> bool:
        return self.images[x] == x

    def cycles(self) -> list[tuple[int, ...]]:
        """Nontrivial cycles, each starting at its least point."""
        seen = set()
        out = []
        for i in range(len(self.images)):
            if i in seen:
                continue
            cyc = [i]
            seen.add(i)
            j = self.images[i]
            while j != i:
                cyc.append(j)
                seen.add(j)
                j = self.images[j]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def order(self) -> int:
        from math import lcm
        return lcm(1, *(len(c) for c in self.cycles()))

    def to_cycle_string(self) -> str:
        cyc = self.cycles()
        if not cyc:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cyc)

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.images == other.images

    def __lt__(self, other: Permutation):
        return self.images < other.images

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Permutation({self.to_cycle_string()}, degree={self.degree})"


def parse_cycles(text: str, degree: int | None = None) -> Permutation:
    """Parse cycle notation such as ``"(0 1)(2 3)"``; ``"()"`` is the identity."""
    s = text.strip()
    cycles = []
    i = 0
    while i < len(s):
        ch = s[i]
        if ch.isspace():
            i += 1
            continue
        if ch != "(":
            raise ValueError(f"expected '(' at column {i + 1} in {text!r}")
        j = s.find(")", i)
        if j < 0:
            raise ValueError(f"unclosed cycle at column {i + 1} in {text!r}")
        body = s[i + 1:j].replace(",", " ").split()
        try:
            cyc = [int(t) for t in body]
        except ValueError:
            raise ValueError(f"non-integer point in cycle at column {i + 1} in {text!r}") from None
        if any(x < 0 for x in cyc):
            raise ValueError(f"negative point in cycle at column {i + 1}")
        if cyc:
            cycles.append(cyc)
        i = j + 1
    return Permutation.from_cycles(cycles, degree)


# ---------------------------------------------------------------------------
# actions


def closure(generators: Sequence[Permutation], degree: int,
            budget: int = DEFAULT_CLOSURE_BUDGET) -> frozenset[Permutation]:
    """All elements of the group generated by ``generators`` (breadth first).

    Raises :class:`ClosureBudgetExceeded` once more than ``budget`` elements
    have been found.
    """
    ident = Permutation.identity(degree)
    gens = [g for g in dict.fromkeys(generators) if not g.is_identity()]
    for g in gens:
        if g.degree != degree:
            raise ValueError("degree mismatch")
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                k = g * h
                if k not in seen:
                    seen.add(k)
                    if len(seen) > budget:
                        raise ClosureBudgetExceeded(
                            f"group closure exceeds budget of {budget} elements")
                    nxt.append(k)
        frontier = nxt
    return frozenset(seen)


@dataclass(frozen=True)
class Subgroup:
    """A subgroup of ``Sym(ambient_degree)`` given by generators.

    ``element_closure`` caches the full element set when known.
    """

    ambient_degree: int
    generating_permutations: tuple[Permutation, ...]
    element_closure: frozenset[Permutation] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "generating_permutations", tuple(self.generating_permutations))
        for g in self.generating_permutations:
            if g.degree != self.ambient_degree:
                raise ValueError("generator degree differs from ambient degree")
        if self.element_closure is not None:
            els = frozenset(self.element_closure)
            ident = Permutation.identity(self.ambient_degree)
            if ident not in els:
                raise ValueError("element closure lacks the identity")
            object.__setattr__(self, "element_closure", els)

    def elements(self, budget: int = DEFAULT_CLOSURE_BUDGET) -> frozenset[Permutation]:
        if self.element_closure is None:
            object.__setattr__(self, "element_closure",
                               closure(self.generating_permutations, self.ambient_degree, budget))
        return self.element_closure

    def order(self, budget: int = DEFAULT_CLOSURE_BUDGET) -> int:
        return len(self.elements(budget))

    def __contains__(self, p: Permutation) -> bool:
        return p in self.elements()

    def is_cyclic(self) -> bool:
        n = self.order()
        return any(g.order() == n for g in self.elements())


def subgroup_contains(h: Subgroup, k: Subgroup, budget: int = DEFAULT_CLOSURE_BUDGET) -> bool:
    """True iff every generator of ``k`` lies in ``h``."""
    if h.ambient_degree != k.ambient_degree:
        raise ValueError(f"degree mismatch: {h.ambient_degree} vs {k.ambient_degree}")
    els = h.elements(budget)
    return all(g in els for g in k.generating_permutations)


@dataclass(frozen=True)
class FiniteAction:
    """A group acting on ``{0, ..., set_size-1}`` through generator images.

    Relators of the presentation are checked on construction.
    """

    presentation: GroupPresentation
    set_size: int
    generator_images: tuple[Permutation, ...]

    def __post_init__(self):
        imgs = tuple(self.generator_images)
        object.__setattr__(self, "generator_images", imgs)
        if len(imgs) != self.presentation.generator_count:
            raise ActionError(f"{len(imgs)} generator images for "
                              f"{self.presentation.generator_count} generators")
        for i, p in enumerate(imgs):
            if p.degree != self.set_size:
                raise ActionError(f"generator {i} has degree {p.degree}, expected {self.set_size}")
        for r in self.presentation.relators:
            if not evaluate_word(r, self).is_identity():
                raise ActionError(f"relator {format_word(r)} is not satisfied")

    @classmethod
    def free(cls, set_size: int, images: Sequence[Permutation]) -> FiniteAction:
        return cls(GroupPresentation.free(len(images)), set_size, tuple(images))

    @property
    def generator_count(self) -> int:
        return len(self.generator_images)

    def act(self, word: Word, x: int) -> int:
        return evaluate_word(word, self)[x]

    def image_group(self) -> Subgroup:
        return Subgroup(self.set_size, self.generator_images)


def evaluate_word(w: Word, a: FiniteAction) -> Permutation:
    """The permutation by which ``w`` acts; the rightmost letter acts first."""
    return evaluate_on(w, a.generator_images, a.set_size)


def evaluate_on(w: Sequence[tuple[int, int]], images: Sequence[Permutation], degree: int) -> Permutation:
    result = list(range(degree))
    inverses: dict[int, Permutation] = {}
    for g, s in reversed(w):
        if g >= len(images):
            raise IndexError(f"word uses generator {g}, action has {len(images)}")
        if s > 0:
            p = images[g].images
        else:
            if g not in inverses:
                inverses[g] = images[g].inverse()
            p = inverses[g].images
        result = [p[x] for x in result]
    return Permutation._trusted(tuple(result))


def orbits(a: FiniteAction) -> list[tuple[int, ...]]:
    """Orbits of the generated group, each sorted, ordered by least element."""
    return orbits_of(a.generator_images, a.set_size)


def orbits_of(gens: Sequence[Permutation], degree: int) -> list[tuple[int, ...]]:
    parent = list(range(degree))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in gens:
        for x, y in enumerate(g.images):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)
    groups: dict[int, list[int]] = {}
    for x in range(degree):
        groups.setdefault(find(x), []).append(x)
    return [tuple(v) for _, v in sorted(groups.items())]


def orbit_transversal(gens: Sequence[Permutation], degree: int, e: int) -> dict[int, Permutation]:
    """Map each point of the orbit of ``e`` to a group element taking ``e`` there."""
    trans = {e: Permutation.identity(degree)}
    queue = deque([e])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = g[x]
            if y not in trans:
                trans[y] = g * trans[x]
                queue.append(y)
    return trans


def stabilizer(a: FiniteAction, e: int, budget: int = DEFAULT_CLOSURE_BUDGET) -> Subgroup:
    """Stabilizer of ``e`` inside the image of ``a`` in ``Sym(E)``.

    Generators are Schreier generators; the element closure is obtained by
    filtering the image group.
    """
    if not 0 <= e < a.set_size:
        raise IndexError(f"point {e} outside set of size {a.set_size}")
    return stabilizer_in(a.generator_images, a.set_size, e, budget)


def stabilizer_in(gens: Sequence[Permutation], degree: int, e: int,
                  budget: int = DEFAULT_CLOSURE_BUDGET,
                  group: frozenset[Permutation] | None = None) -> Subgroup:
    if group is None:
        group = closure(gens, degree, budget)
    trans = orbit_transversal(gens, degree, e)
    schreier = set()
    for x, t in trans.items():
        for g in gens:
            s = trans[g[x]].inverse() * g * t
            if not s.is_identity():
                schreier.add(s)
    fixers = frozenset(g for g in group if g[e] == e)
    return Subgroup(degree, tuple(sorted(schreier)), fixers)
