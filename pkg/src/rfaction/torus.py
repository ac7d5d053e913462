"""Flat tori, their isometries, and grid residues for isometric actions.

A flat torus is ``R^n / L``.  Everything here works in *lattice
coordinates*: a point is a rational vector modulo 1, and the metric is the
quadratic form given by the Gram matrix of a basis of ``L``.  An isometry is
a pair ``(M, z)`` acting by ``x -> M x + z (mod 1)`` where ``M`` is an
integer matrix preserving the Gram matrix.

The residues built here live on the grid ``(1/N) Z^n / Z^n``: the finite
parts of the generators preserve it, and each rotation is replaced by the
nearest rotation with denominator ``N``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .groups import (FiniteAction, GroupPresentation, Permutation, Word,
                     generator_word)
from .residue import Ambient, Residue
from .spaces import as_fraction

MAX_DIMENSION = 4
DEFAULT_POINT_BUDGET = 10**6


class TorusError(ValueError):
    pass


class PointBudgetExceeded(TorusError):
    pass


def _frac_vec(v) -> tuple[Fraction, ...]:
    return tuple(as_fraction(x) for x in v)


def _mod1(v) -> tuple[Fraction, ...]:
    return tuple(x - math.floor(x) for x in v)


def sqrt_upper(q, places: int = 1000) -> Fraction:
    """A rational upper bound for ``sqrt(q)`` within ``1/places``."""
    q = Fraction(q)
    a = q * places * places
    s = math.isqrt(math.ceil(a))
    if s * s < a:
        s += 1
    return Fraction(s, places)


def _mat_inverse(G):
    """Exact inverse of a small rational matrix (Gauss-Jordan)."""
    n = len(G)
    A = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(G)]
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            raise TorusError("singular matrix")
        A[c], A[piv] = A[piv], A[c]
        pv = A[c][c]
        A[c] = [x / pv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


class Lattice:
    """A lattice given by its Gram matrix, optionally with a basis.

    ``basis[i]`` is the basis vector ``b_i``; ``gram[i][j] = b_i . b_j``.
    """

    def __init__(self, gram: Sequence[Sequence], basis: Sequence[Sequence] | None = None):
        G = tuple(tuple(as_fraction(x) for x in row) for row in gram)
        n = len(G)
        if not 1 <= n <= MAX_DIMENSION:
            raise TorusError(f"dimension {n} unsupported (1..{MAX_DIMENSION})")
        if any(len(row) != n for row in G):
            raise TorusError("gram matrix is not square")
        if any(G[i][j] != G[j][i] for i in range(n) for j in range(n)):
            raise TorusError("gram matrix is not symmetric")
        # Sylvester: all leading minors positive
        for k in range(1, n + 1):
            if _det([row[:k] for row in G[:k]]) <= 0:
                raise TorusError("gram matrix is not positive definite")
        self.gram = G
        self.basis = None if basis is None else tuple(_frac_vec(b) for b in basis)
        self.gram_inverse = tuple(tuple(r) for r in _mat_inverse(G))
        self._cache: dict = {}

    @classmethod
    def from_basis(cls, basis: Sequence[Sequence]) -> Lattice:
        B = [_frac_vec(b) for b in basis]
        n = len(B)
        if any(len(b) != n for b in B):
            raise TorusError("basis must be n vectors of length n")
        G = [[sum(x * y for x, y in zip(B[i], B[j])) for j in range(n)] for i in range(n)]
        if _det(G) == 0:
            raise TorusError("basis is not invertible")
        return cls(G, B)

    @classmethod
    def standard(cls, n: int) -> Lattice:
        return cls.from_basis([[int(i == j) for j in range(n)] for i in range(n)])

    @property
    def dimension(self) -> int:
        return len(self.gram)

    def qform(self, v) -> Fraction:
        G = self.gram
        n = len(G)
        return sum(v[i] * G[i][j] * v[j] for i in range(n) for j in range(n))

    def norm_sq(self, i: int) -> Fraction:
        return self.gram[i][i]

    def max_norm_upper(self) -> Fraction:
        return max(sqrt_upper(self.gram[i][i]) for i in range(self.dimension))

    def preserves(self, M) -> bool:
        return gram_witness(self, M) is None

    def __eq__(self, other):
        if not isinstance(other, Lattice):
            return NotImplemented
        return self.gram == other.gram and self.basis == other.basis

    def __hash__(self):
        return hash((self.gram, self.basis))

    def __repr__(self):
        return f"Lattice(gram={[[str(x) for x in r] for r in self.gram]})"


def _det(M) -> Fraction:
    M = [list(map(Fraction, r)) for r in M]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return det


def gram_witness(l: Lattice, M) -> tuple[int, int] | None:
    """An entry ``(i, j)`` where ``M^T G M`` differs from ``G``, or ``None``."""
    G = l.gram
    n = l.dimension
    for i in range(n):
        for j in range(n):
            v = sum(M[a][i] * G[a][b] * M[b][j] for a in range(n) for b in range(n))
            if v != G[i][j]:
                return i, j
    return None


@dataclass(frozen=True)
class FlatTorus:
    lattice: Lattice

    @property
    def dimension(self) -> int:
        return self.lattice.dimension

    def canonical(self, x) -> tuple[Fraction, ...]:
        x = _frac_vec(x)
        if len(x) != self.dimension:
            raise TorusError(f"point has {len(x)} coordinates, torus has dimension {self.dimension}")
        return _mod1(x)


class SearchRadiusError(TorusError):
    pass


def _centered(d):
    return tuple(x - math.floor(x + Fraction(1, 2)) for x in d)


def _min_sq(l: Lattice, c: tuple[Fraction, ...], radius: int | None):
    """Least ``q(c - k)`` over integer ``k``; ``c`` already centered."""
    key = (c, radius)
    hit = l._cache.get(key)
    if hit is not None:
        return hit
    n = l.dimension
    if radius is None:
        q = l.qform(c)
        radii = []
        for i in range(n):
            b = q * l.gram_inverse[i][i]
            radii.append(math.isqrt(math.ceil(b)) + 1)
    else:
        radii = [radius] * n
    best = None
    best_k = None
    for k in itertools.product(*(range(-r, r + 1) for r in radii)):
        v = tuple(ci - ki for ci, ki in zip(c, k))
        q = l.qform(v)
        if best is None or q < best:
            best, best_k = q, k
    if radius is not None:
        # a shift outside the box has some |v_i| >= radius + 1 - |c_i|, and
        # q(v) >= v_i^2 / Ginv_ii, so the box is enough when that beats best
        for i in range(n):
            gap = radius + 1 - abs(c[i])
            if gap * gap < best * l.gram_inverse[i][i]:
                raise SearchRadiusError(f"search radius {radius} cannot certify the minimizer "
                                        f"{best_k} in coordinate {i}")
    l._cache[key] = best
    return best


def torus_distance(t: FlatTorus, x, y, search_radius: int | None = None) -> tuple[Fraction, float]:
    """Exact squared flat distance and its float square root.

    Without ``search_radius`` the shift box is derived from the Gram
    inverse, which bounds every coordinate of a shortest representative.
    With an explicit radius, :class:`SearchRadiusError` is raised when the
    box is too small to rule out a shorter shift outside it.
    """
    x, y = t.canonical(x), t.canonical(y)
    c = _centered(tuple(a - b for a, b in zip(x, y)))
    sq = _min_sq(t.lattice, c, search_radius)
    return sq, math.sqrt(sq)


def torus_sq_distance(t: FlatTorus, x, y) -> Fraction:
    c = _centered(tuple(as_fraction(a) - as_fraction(b) for a, b in zip(x, y)))
    return _min_sq(t.lattice, c, None)


def relevant_vectors(l: Lattice) -> list[tuple[int, ...]]:
    """Voronoi-relevant vectors: ``v`` with ``+-v`` the only shortest vectors of ``v + 2L``."""
    n = l.dimension
    out = []
    for cls in itertools.product((0, 1), repeat=n):
        if not any(cls):
            continue
        # shortest vectors of the class are c - 2k for k minimizing q(c/2 - k)
        half = tuple(Fraction(x, 2) for x in cls)
        bound = l.qform(half)
        radii = [math.isqrt(math.ceil(bound * l.gram_inverse[i][i])) + 1 for i in range(n)]
        best, found = None, []
        for k in itertools.product(*(range(-r, r + 1) for r in radii)):
            v = tuple(c - 2 * ki for c, ki in zip(cls, k))
            q = l.qform(v)
            if best is None or q < best:
                best, found = q, [v]
            elif q == best:
                found.append(v)
        if len(found) == 2:
            out.extend(sorted(found))
    return out


def covering_radius_sq(l: Lattice) -> Fraction:
    """Exact squared covering radius: the farthest Voronoi vertex from the origin.

    Vertices are the points equidistant from 0 and ``n`` independent
    relevant vectors that satisfy every facet inequality ``2 x.G.v <= q(v)``.
    """
    hit = l._cache.get("covering")
    if hit is not None:
        return hit
    n = l.dimension
    G = l.gram
    rel = relevant_vectors(l)
    rows = [(tuple(sum(G[i][j] * v[j] for j in range(n)) for i in range(n)), l.qform(v)) for v in rel]
    worst = Fraction(0)
    for subset in itertools.combinations(range(len(rows)), n):
        A = [rows[i][0] for i in subset]
        if _det(A) == 0:
            continue
        Ainv = _mat_inverse(A)
        rhs = [rows[i][1] / 2 for i in subset]
        x = tuple(sum(Ainv[i][j] * rhs[j] for j in range(n)) for i in range(n))
        if all(2 * sum(a * b for a, b in zip(gv, x)) <= q for gv, q in rows):
            worst = max(worst, l.qform(x))
    l._cache["covering"] = worst
    return worst


# ---------------------------------------------------------------------------
# automorphisms and isometries


def lattice_automorphisms(l: Lattice) -> list[tuple[tuple[int, ...], ...]]:
    """All integer matrices ``M`` with ``M^T G M = G`` (lattice coordinates).

    Columns are chosen one at a time among integer vectors with the right
    norm and the right inner products with the earlier columns.
    """
    n = l.dimension
    if n > MAX_DIMENSION:
        raise TorusError(f"dimension {n} unsupported")
    G, Gi = l.gram, l.gram_inverse
    candidates = []
    for j in range(n):
        target = G[j][j]
        # |v_k| <= sqrt(q(v) * Ginv_kk) for every vector v
        bounds = [math.isqrt(math.floor(target * Gi[k][k])) for k in range(n)]
        cols = [v for v in itertools.product(*(range(-b, b + 1) for b in bounds))
                if l.qform(v) == target]
        candidates.append(cols)

    def inner(u, v):
        return sum(u[a] * G[a][b] * v[b] for a in range(n) for b in range(n))

    out = []

    def extend(cols):
        j = len(cols)
        if j == n:
            out.append(tuple(tuple(cols[c][r] for c in range(n)) for r in range(n)))
            return
        for v in candidates[j]:
            if all(inner(cols[i], v) == G[i][j] for i in range(j)):
                extend(cols + [v])

    extend([])
    return sorted(out)


def _matmul(A, B):
    n = len(A)
    return tuple(tuple(sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)) for i in range(n))


def _matvec(A, v):
    return tuple(sum(a * x for a, x in zip(row, v)) for row in A)


def _identity(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _int_inverse(M):
    inv = _mat_inverse([[Fraction(x) for x in row] for row in M])
    if any(x.denominator != 1 for row in inv for x in row):
        raise TorusError("matrix is not invertible over the integers")
    return tuple(tuple(int(x) for x in row) for row in inv)


@dataclass(frozen=True)
class TorusIsometry:
    """``x -> M x + z (mod 1)``.

    ``stand_in`` marks a translation whose coordinates model irrational
    rotation angles: residue construction approximates them instead of
    folding their denominators into the grid.
    """

    finite_part: tuple[tuple[int, ...], ...]
    translation: tuple[Fraction, ...]
    stand_in: bool = False

    def __post_init__(self):
        M = tuple(tuple(int(x) for x in row) for row in self.finite_part)
        z = _mod1(_frac_vec(self.translation))
        if any(len(row) != len(M) for row in M) or len(z) != len(M):
            raise TorusError("finite part and translation sizes disagree")
        object.__setattr__(self, "finite_part", M)
        object.__setattr__(self, "translation", z)

    @classmethod
    def translation_by(cls, z, stand_in: bool = False) -> TorusIsometry:
        return cls(_identity(len(z)), _frac_vec(z), stand_in)

    @classmethod
    def rotation(cls, n: int, coordinate: int, angle, stand_in: bool = False) -> TorusIsometry:
        z = [Fraction(0)] * n
        z[coordinate] = as_fraction(angle)
        return cls(_identity(n), tuple(z), stand_in)

    @classmethod
    def linear(cls, M) -> TorusIsometry:
        return cls(M, (Fraction(0),) * len(M))

    @property
    def dimension(self) -> int:
        return len(self.finite_part)

    def apply(self, x):
        return _mod1(tuple(a + b for a, b in zip(_matvec(self.finite_part, x), self.translation)))

    def __mul__(self, other: TorusIsometry) -> TorusIsometry:
        """``self . other``: apply ``other`` first."""
        return compose(self, other)

    def inverse(self) -> TorusIsometry:
        Mi = _int_inverse(self.finite_part)
        return TorusIsometry(Mi, tuple(-x for x in _matvec(Mi, self.translation)), self.stand_in)

    def is_identity(self) -> bool:
        return self.finite_part == _identity(self.dimension) and not any(self.translation)

    def is_linear(self) -> bool:
        return not any(self.translation)

    def rotation_coordinate(self) -> int | None:
        """Coordinate of a single-coordinate rotation; -1 for the identity; None otherwise."""
        if self.finite_part != _identity(self.dimension):
            return None
        nz = [i for i, x in enumerate(self.translation) if x]
        if not nz:
            return -1
        return nz[0] if len(nz) == 1 else None

    def permutation_on(self, E: LatticePointSet) -> Permutation:
        """The permutation of ``E`` induced by this isometry (translation must lie in ``E``)."""
        N = E.denominator
        p = [x * N for x in self.translation]
        if any(x.denominator != 1 for x in p):
            raise TorusError(f"translation {self.translation} does not preserve the 1/{N} grid")
        M = np.array(self.finite_part, dtype=np.int64)
        K = E.index_array()
        img = (K @ M.T + np.array([int(x) for x in p], dtype=np.int64)) % N
        return Permutation._trusted(tuple(E.linear_index(img).tolist()))


def compose(f: TorusIsometry, g: TorusIsometry) -> TorusIsometry:
    """``(M1, z1) . (M2, z2) = (M1 M2, z1 + M1 z2)``."""
    return TorusIsometry(_matmul(f.finite_part, g.finite_part),
                         tuple(a + b for a, b in zip(f.translation, _matvec(f.finite_part, g.translation))),
                         f.stand_in or g.stand_in)


def decompose_isometry(l: Lattice, matrix, vector) -> TorusIsometry:
    """Split ``x -> matrix x + vector`` into its finite part and canonical translation."""
    M = tuple(tuple(as_fraction(x) for x in row) for row in matrix)
    if any(x.denominator != 1 for row in M for x in row):
        raise TorusError("finite part must be an integer matrix")
    if len(M) != l.dimension:
        raise TorusError("matrix size differs from lattice dimension")
    w = gram_witness(l, M)
    if w is not None:
        raise TorusError(f"matrix does not preserve the gram matrix at entry {w}")
    return TorusIsometry(M, _frac_vec(vector))


# ---------------------------------------------------------------------------
# grids


class LatticePointSet:
    """The ``N^n`` points ``(1/N) Z^n / Z^n``; index ``sum k_i N^(n-1-i)``."""

    def __init__(self, denominator: int, dimension: int):
        if denominator < 1:
            raise TorusError("denominator must be positive")
        self.denominator = int(denominator)
        self.dimension = int(dimension)
        self._K = None

    def __len__(self):
        return self.denominator ** self.dimension

    def index_array(self) -> np.ndarray:
        if self._K is None:
            N, n = self.denominator, self.dimension
            self._K = np.array(list(itertools.product(range(N), repeat=n)), dtype=np.int64).reshape(-1, n)
        return self._K

    def linear_index(self, K: np.ndarray) -> np.ndarray:
        N = self.denominator
        idx = np.zeros(K.shape[0], dtype=np.int64)
        for i in range(self.dimension):
            idx = idx * N + K[:, i]
        return idx

    def point(self, index: int) -> tuple[Fraction, ...]:
        N = self.denominator
        out = []
        for _ in range(self.dimension):
            out.append(Fraction(index % N, N))
            index //= N
        return tuple(reversed(out))

    def index(self, x) -> int:
        N = self.denominator
        i = 0
        for c in x:
            k = as_fraction(c) * N
            if k.denominator != 1:
                raise TorusError(f"{x} is not on the 1/{N} grid")
            i = i * N + int(k) % N
        return i

    def points(self) -> list[tuple[Fraction, ...]]:
        return [self.point(i) for i in range(len(self))]

    def __contains__(self, x) -> bool:
        return all((as_fraction(c) * self.denominator).denominator == 1 for c in x)


# ---------------------------------------------------------------------------
# residues


def delta_for(epsilon, l: Lattice) -> Fraction:
    """Grid scale for a target epsilon.

    ``delta = eps / (2 n sqrt(n) (1 + max |b_i|))`` with the square roots
    replaced by rational upper bounds, so ``delta`` never exceeds the real
    value of the formula.
    """
    eps = as_fraction(epsilon)
    n = l.dimension
    return eps / (2 * n * sqrt_upper(n) * (1 + l.max_norm_upper()))


def choose_modulus(rotations: Sequence, delta, l: Lattice) -> int:
    """Smallest ``N`` that is a multiple of every exact rotation denominator and
    satisfies ``|b_i| / N < delta`` and, for each stand-in angle ``theta``,
    ``|theta - p/N| < delta`` for some integer ``p``.

    ``rotations`` holds ``(angle, stand_in)`` pairs.
    """
    delta = as_fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    base = 1
    stand = []
    for angle, flag in rotations:
        a = as_fraction(angle)
        if flag:
            stand.append(a)
        else:
            base = math.lcm(base, a.denominator)
    norms = [l.norm_sq(i) for i in range(l.dimension)]
    k = 1
    while True:
        N = base * k
        if all(q < delta * delta * N * N for q in norms) and all(
                abs(a - Fraction(round(a * N), N)) < delta for a in stand):
            return N
        k += 1


@dataclass(frozen=True)
class CopyGenerator:
    """An isometry of ``c`` disjoint copies of a torus.

    Copy ``i`` is sent to copy ``copy_perm[i]`` by ``x -> M x + v``.
    ``stand_in`` flags coordinates of ``v`` that model irrational angles.
    """

    copy_perm: Permutation
    finite_part: tuple[tuple[int, ...], ...]
    rotation: tuple[Fraction, ...]
    stand_in: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "finite_part", tuple(tuple(int(x) for x in r) for r in self.finite_part))
        object.__setattr__(self, "rotation", _mod1(_frac_vec(self.rotation)))
        flags = tuple(bool(f) for f in self.stand_in) or (False,) * len(self.rotation)
        if len(flags) != len(self.rotation):
            raise TorusError("stand_in flags must match rotation length")
        object.__setattr__(self, "stand_in", flags)

    @classmethod
    def from_isometry(cls, g: TorusIsometry, copies: int = 1) -> CopyGenerator:
        return cls(Permutation.identity(copies), g.finite_part, g.translation,
                   (g.stand_in,) * g.dimension)

    def isometry(self) -> TorusIsometry:
        return TorusIsometry(self.finite_part, self.rotation, any(self.stand_in))

    def inverse(self) -> CopyGenerator:
        inv = self.isometry().inverse()
        return CopyGenerator(self.copy_perm.inverse(), inv.finite_part, inv.translation, self.stand_in)

    def apply(self, point):
        i, x = point
        return self.copy_perm[i], self.isometry().apply(x)


class TorusAmbient(Ambient):
    """A flat torus with generators acting by :class:`TorusIsometry`."""

    def __init__(self, torus: FlatTorus, generators: Sequence[TorusIsometry] = ()):
        self.torus = torus
        self.generators = tuple(generators)
        self._inv = [g.inverse() for g in self.generators]

    def sq_distance(self, x, y):
        return torus_sq_distance(self.torus, x, y)

    def word_element(self, word: Word) -> TorusIsometry:
        n = self.torus.dimension
        result = TorusIsometry.linear(_identity(n))
        for g, s in reversed(word):
            result = (self.generators[g] if s > 0 else self._inv[g]) * result
        return result

    def word_map(self, word):
        w = self.word_element(word)
        return w.apply

    def contains(self, x):
        return (isinstance(x, tuple) and len(x) == self.torus.dimension
                and all(isinstance(c, Fraction) and 0 <= c < 1 for c in x))

    def apply_isometry(self, iso: TorusIsometry, x):
        return iso.apply(x)

    def nearest_sq(self, x, labels):
        N = _grid_of(labels, self.torus.dimension)
        if N is not None:
            return grid_nearest_sq(self.torus, N, x)
        return super().nearest_sq(x, labels)


class DisjointToriAmbient(Ambient):
    """``c`` disjoint copies of a torus; points are ``(copy, x)``.

    Points on different copies are infinitely far apart.
    """

    def __init__(self, torus: FlatTorus, copies: int, generators: Sequence[CopyGenerator] = ()):
        self.torus = torus
        self.copies = copies
        self.generators = tuple(generators)
        self._inv = [g.inverse() for g in self.generators]

    def sq_distance(self, p, q):
        if p[0] != q[0]:
            return math.inf
        return torus_sq_distance(self.torus, p[1], q[1])

    def word_map(self, word):
        seq = [(self.generators[g] if s > 0 else self._inv[g]) for g, s in reversed(word)]

        def f(point):
            for g in seq:
                point = g.apply(point)
            return point
        return f

    def contains(self, p):
        return (isinstance(p, tuple) and len(p) == 2 and 0 <= p[0] < self.copies
                and len(p[1]) == self.torus.dimension)

    def nearest_sq(self, p, labels):
        return min((self.sq_distance(p, z) for z in labels if z[0] == p[0]), default=math.inf)


def _grid_of(labels, n):
    """``N`` when ``labels`` is exactly the grid ``LatticePointSet(N, n)`` in index order."""
    m = len(labels)
    N = round(m ** (1 / n)) if m else 0
    for cand in (N - 1, N, N + 1):
        if cand >= 1 and cand**n == m:
            N = cand
            break
    else:
        return None
    E = LatticePointSet(N, n)
    step = max(1, m // 7)
    if all(labels[i] == E.point(i) for i in range(0, m, step)) and labels[-1] == E.point(m - 1):
        return N
    return None


def grid_nearest_sq(t: FlatTorus, N: int, x) -> Fraction:
    """Squared distance from ``x`` to the nearest point of the ``1/N`` grid."""
    y = _mod1(tuple(as_fraction(c) * N for c in x))
    return torus_sq_distance(t, y, (Fraction(0),) * len(y)) / (N * N)


@dataclass(frozen=True, eq=False)
class TorusResidue:
    """A grid residue with its verification data (squared distances are exact)."""

    residue: Residue
    modulus: int
    delta: Fraction
    copies: int
    defect_sq: tuple[Fraction, ...]
    density_radius_sq: Fraction
    density_bound_sq: Fraction
    proxies: tuple

    @property
    def max_defect_sq(self) -> Fraction:
        return max(self.defect_sq, default=Fraction(0))

    @property
    def epsilon(self) -> Fraction:
        return self.residue.epsilon

    @property
    def passed(self) -> bool:
        e2 = self.epsilon**2
        return self.max_defect_sq < e2 and self.density_radius_sq < e2 \
            and self.density_radius_sq <= self.density_bound_sq


def _grid_defects(l: Lattice, E: LatticePointSet, gen: CopyGenerator, proxy: tuple[int, ...]) -> Fraction:
    """Exhaustive ``max_e d(zeta(g.e), g.zeta(e))^2`` over the grid, in exact arithmetic.

    Both sides are rational with denominator dividing ``L``; their
    difference is reduced to integer rows, deduplicated, and each distinct
    difference is measured once.
    """
    N, n = E.denominator, E.dimension
    L = N
    for v in gen.rotation:
        L = math.lcm(L, v.denominator)
    if L * N * (1 + max((abs(x) for row in gen.finite_part for x in row), default=1)) * n >= 2**62:
        raise TorusError("rotation denominators too large for exact grid verification")
    s = L // N
    K = E.index_array()
    M = np.array(gen.finite_part, dtype=np.int64)
    MK = K @ M.T
    lhs = ((MK + np.array(proxy, dtype=np.int64)) % N) * s
    vL = np.array([int(v * L) for v in gen.rotation], dtype=np.int64)
    diff = np.unique((lhs - (MK * s + vL)) % L, axis=0)
    worst = Fraction(0)
    for row in diff.tolist():
        c = _centered(tuple(Fraction(int(k), L) for k in row))
        d = _min_sq(l, c, None)
        if d > worst:
            worst = d
    return worst


def _density(t: FlatTorus, N: int, witnesses=None) -> Fraction:
    if witnesses is None:
        # the 1/N grid is the lattice scaled by 1/N
        return covering_radius_sq(t.lattice) / (N * N)
    return max((grid_nearest_sq(t, N, x) for x in witnesses), default=Fraction(0))


def _grid_residue(t: FlatTorus, gens: Sequence[CopyGenerator], copies: int, epsilon,
                  point_budget: int, witnesses=None) -> TorusResidue:
    l = t.lattice
    n = l.dimension
    eps = as_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    for i, g in enumerate(gens):
        if g.copy_perm.degree != copies:
            raise TorusError(f"generator {i} permutes {g.copy_perm.degree} copies, expected {copies}")
        if len(g.finite_part) != n:
            raise TorusError(f"generator {i} has the wrong dimension")
        w = gram_witness(l, g.finite_part)
        if w is not None:
            raise TorusError(f"generator {i}: finite part does not preserve the gram matrix at {w}")
    delta = delta_for(eps, l)
    rotations = [(v, f) for g in gens for v, f in zip(g.rotation, g.stand_in) if v]
    N = choose_modulus(rotations, delta, l)
    size = copies * N**n
    if size > point_budget:
        raise PointBudgetExceeded(f"grid needs {size} points, over the budget of {point_budget}")
    E = LatticePointSet(N, n)
    K = E.index_array()
    block = N**n
    images = []
    proxies = []
    defects = []
    for g in gens:
        proxy = tuple(round(v * N) % N for v in g.rotation)
        proxies.append(proxy)
        M = np.array(g.finite_part, dtype=np.int64)
        local = E.linear_index((K @ M.T + np.array(proxy, dtype=np.int64)) % N)
        img = np.concatenate([g.copy_perm[i] * block + local for i in range(copies)])
        images.append(Permutation._trusted(tuple(img.tolist())))
        defects.append(_grid_defects(l, E, g, proxy))
    action = FiniteAction(GroupPresentation.free(len(gens)), size, tuple(images))
    pts = E.points()
    labels = pts if copies == 1 else [(i, x) for i in range(copies) for x in pts]
    words = tuple(generator_word(i) for i in range(len(gens))) or (Word(),)
    res = Residue(action, tuple(labels), eps, words)
    dens = _density(t, N, witnesses)
    bound = n**3 * delta * delta
    return TorusResidue(res, N, delta, copies, tuple(defects), dens, bound, tuple(proxies))


def build_torus_residue(t: FlatTorus, generators: Sequence[TorusIsometry], epsilon,
                        point_budget: int = DEFAULT_POINT_BUDGET,
                        witnesses=None) -> TorusResidue:
    """Grid residue for isometries in normal form ``F u Z``.

    Each generator is either linear (a lattice automorphism, zero
    translation) or a rotation in a single coordinate.  The density radius
    is the exact covering radius of the grid, or the largest distance from
    ``witnesses`` to the grid when those are given.
    """
    n = t.dimension
    for i, g in enumerate(generators):
        if g.dimension != n:
            raise TorusError(f"generator {i} has dimension {g.dimension}, torus has {n}")
        if not g.is_linear() and g.rotation_coordinate() is None:
            raise TorusError(f"generator {i} is neither a lattice automorphism nor a "
                             "single-coordinate rotation")
    gens = [CopyGenerator.from_isometry(g) for g in generators]
    return _grid_residue(t, gens, 1, epsilon, point_budget, witnesses)


def build_orbit_closure_residue(t: FlatTorus, generators: Sequence[CopyGenerator], copies: int,
                                epsilon, point_budget: int = DEFAULT_POINT_BUDGET) -> TorusResidue:
    """Residue on ``copies`` disjoint copies of the torus.

    Generators permute the copies and act inside them through a lattice
    automorphism and a rotation vector already in diagonal form.
    """
    if copies < 1:
        raise TorusError("need at least one copy")
    for i, g in enumerate(generators):
        if g.copy_perm.degree != copies:
            raise TorusError(f"generator {i}: inconsistent coset permutation data")
    # rotation generators (identity linear part) act on the union as translations
    # composed with a copy permutation; they commute iff the permutations do
    rot = [(i, g) for i, g in enumerate(generators) if g.finite_part == _identity(t.dimension)]
    for a, (i, g) in enumerate(rot):
        for j, h in rot[:a]:
            if g.copy_perm * h.copy_perm != h.copy_perm * g.copy_perm:
                raise TorusError(f"rotation generators {j} and {i} do not commute")
    return _grid_residue(t, list(generators), copies, epsilon, point_budget)


def translation_residue(tr: TorusResidue) -> Residue:
    """The same finite action labelled by the grid translations ``x -> x + zeta(e)``.

    Useful as a residue on the isometry group, to push forward along orbit maps.
    """
    r = tr.residue
    if tr.copies != 1:
        raise TorusError("only single-copy residues have translation labels")
    return Residue(r.action, tuple(TorusIsometry.translation_by(z) for z in r.labels),
                   r.epsilon, r.words)
