"""Text formats for spaces, actions, lattices and residues.

A file is a sequence of blocks.  Each block starts with a header line whose
first word names the block; the lines after it belong to the block until the
next header.  ``#`` starts a comment and blank lines are ignored.  The
grammar of every block is described in ``docs/formats.md``.

Every ``format_*`` function emits text that :func:`parse_document` reads
back into an equal object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .groups import (FiniteAction, GroupPresentation, Permutation,
                     format_word, parse_cycles, parse_word)
from .residue import Residue
from .spaces import (FiniteMetricSpace, LevelAction, ProfiniteSpace,
                     check_metric)
from .torus import Lattice, TorusIsometry

HEADERS = ("metric", "profinite", "presentation", "action", "levelaction",
           "lattice", "generators", "residue", "witness")


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else (f"column {column}: " if column else "")
        super().__init__(where + msg)


def fmt_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_rational(text: str, line: int = 0, column: int = 1) -> Fraction:
    """Parse ``-?digits(/digits)?``; errors point at the offending column."""
    i = 0
    n = len(text)
    if i < n and text[i] in "+-":
        i += 1
    start = i
    while i < n and text[i].isdigit():
        i += 1
    if i == start:
        raise ParseError(f"expected a rational, got {text!r}", line, column + i)
    if i < n:
        if text[i] != "/":
            raise ParseError(f"unexpected character {text[i]!r} in rational {text!r}", line, column + i)
        slash = i
        i += 1
        dstart = i
        while i < n and text[i].isdigit():
            i += 1
        if i == dstart or i < n:
            raise ParseError(f"malformed denominator in rational {text!r}", line, column + slash)
        if int(text[dstart:]) == 0:
            raise ParseError(f"zero denominator in {text!r}", line, column + slash)
        return Fraction(int(text[:slash]), int(text[dstart:]))
    return Fraction(int(text))


# ---------------------------------------------------------------------------
# lexing


@dataclass
class Line:
    number: int
    tokens: list[tuple[str, int]]      # (token, 1-based column)
    text: str                          # comment-stripped content

    @property
    def keyword(self) -> str:
        return self.tokens[0][0]

    def rest(self) -> str:
        """Text after the keyword."""
        col = self.tokens[0][1] - 1 + len(self.tokens[0][0])
        return self.text[col:].strip()

    def rest_column(self) -> int:
        col = self.tokens[0][1] - 1 + len(self.tokens[0][0])
        s = self.text[col:]
        return col + 1 + (len(s) - len(s.lstrip()))


def _lex(text: str) -> list[Line]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].rstrip()
        toks = []
        i = 0
        while i < len(s):
            if s[i].isspace():
                i += 1
                continue
            j = i
            while j < len(s) and not s[j].isspace():
                j += 1
            toks.append((s[i:j], i + 1))
            i = j
        if toks:
            out.append(Line(no, toks, s))
    return out


def _int(tok, line) -> int:
    t, col = tok
    try:
        return int(t)
    except ValueError:
        raise ParseError(f"expected an integer, got {t!r}", line, col) from None


def _rat(tok, line) -> Fraction:
    return parse_rational(tok[0], line, tok[1])


def _ints(line: Line, start=1):
    return [_int(t, line.number) for t in line.tokens[start:]]


def _rats(line: Line, start=1):
    return [_rat(t, line.number) for t in line.tokens[start:]]


def _expect_args(line: Line, k: int):
    if len(line.tokens) - 1 != k:
        raise ParseError(f"'{line.keyword}' takes {k} argument(s)", line.number, line.tokens[0][1])


def _perm(line: Line, degree: int) -> Permutation:
    try:
        return parse_cycles(line.rest(), degree)
    except ValueError as exc:
        raise ParseError(str(exc), line.number, line.rest_column()) from None


def _word(line: Line):
    try:
        return parse_word(line.rest())
    except ValueError as exc:
        raise ParseError(str(exc), line.number, line.rest_column()) from None


def _invariant(line: Line, fn, *args):
    """Run a validating constructor; re-raise its error with the block's position."""
    try:
        return fn(*args)
    except ParseError:
        raise
    except (ValueError, IndexError) as exc:
        raise InvariantError(f"line {line.number}: {exc}") from exc


class InvariantError(ValueError):
    """Well-formed text describing an invalid object."""


# ---------------------------------------------------------------------------
# document


@dataclass
class Document:
    metrics: list[FiniteMetricSpace] = field(default_factory=list)
    profinites: list[ProfiniteSpace] = field(default_factory=list)
    presentations: list[GroupPresentation] = field(default_factory=list)
    actions: list[FiniteAction] = field(default_factory=list)
    level_actions: list[LevelAction] = field(default_factory=list)
    lattices: list[Lattice] = field(default_factory=list)
    generators: list[list[TorusIsometry]] = field(default_factory=list)
    residues: list[Residue] = field(default_factory=list)
    witnesses: list[tuple[str, list]] = field(default_factory=list)

    def one(self, kind: str):
        items = getattr(self, kind)
        if len(items) != 1:
            raise ParseError(f"expected exactly one {kind[:-1]} block, found {len(items)}")
        return items[0]


def _split_blocks(lines: list[Line]):
    blocks = []
    for ln in lines:
        if ln.keyword in HEADERS:
            blocks.append((ln, []))
        elif not blocks:
            raise ParseError(f"expected a block header, got {ln.keyword!r}", ln.number, ln.tokens[0][1])
        else:
            blocks[-1][1].append(ln)
    return blocks


def parse_document(text: str) -> Document:
    doc = Document()
    for head, body in _split_blocks(_lex(text)):
        kind = head.keyword
        if kind == "metric":
            doc.metrics.append(_parse_metric(head, body))
        elif kind == "profinite":
            doc.profinites.append(_parse_profinite(head, body))
        elif kind == "presentation":
            doc.presentations.append(_parse_presentation(head, body))
        elif kind == "action":
            doc.actions.append(_parse_action(head, body))
        elif kind == "levelaction":
            if not doc.profinites:
                raise ParseError("levelaction block needs a preceding profinite block",
                                 head.number, head.tokens[0][1])
            doc.level_actions.append(_parse_level_action(head, body, doc.profinites[-1]))
        elif kind == "lattice":
            doc.lattices.append(_parse_lattice(head, body))
        elif kind == "generators":
            doc.generators.append(_parse_generators(head, body))
        elif kind == "residue":
            doc.residues.append(_parse_residue(head, body))
        elif kind == "witness":
            doc.witnesses.append(_parse_witness(head, body))
    return doc


def _unknown(ln: Line, kind: str):
    return ParseError(f"unexpected line {ln.keyword!r} in {kind} block", ln.number, ln.tokens[0][1])


def _parse_metric(head, body):
    _expect_args(head, 1)
    n = _int(head.tokens[1], head.number)
    rows = [_rats(ln, 0) for ln in body]
    if len(rows) != n:
        raise ParseError(f"metric {n} needs {n} rows, got {len(rows)}", head.number, 1)
    return _invariant(head, check_metric, rows)


def _parse_profinite(head, body):
    levels = bonds = scale = None
    bonds = []
    for ln in body:
        if ln.keyword == "levels":
            levels = _ints(ln)
        elif ln.keyword == "bond":
            bonds.append(tuple(_ints(ln)))
        elif ln.keyword == "scale":
            scale = _rats(ln)
        else:
            raise _unknown(ln, "profinite")
    if levels is None or scale is None:
        raise ParseError("profinite block needs 'levels' and 'scale' lines", head.number, 1)
    return _invariant(head, ProfiniteSpace, tuple(levels), tuple(bonds), tuple(scale))


def _relators(body, kind):
    rels, rest = [], []
    for ln in body:
        if ln.keyword == "relator":
            rels.append(_word(ln))
        else:
            rest.append(ln)
    return rels, rest


def _parse_presentation(head, body):
    _expect_args(head, 1)
    k = _int(head.tokens[1], head.number)
    rels, rest = _relators(body, "presentation")
    if rest:
        raise _unknown(rest[0], "presentation")
    return _invariant(head, GroupPresentation, k, tuple(rels))


def _parse_action(head, body):
    _expect_args(head, 2)
    m = _int(head.tokens[1], head.number)
    k = _int(head.tokens[2], head.number)
    rels, rest = _relators(body, "action")
    gens = []
    for ln in rest:
        if ln.keyword != "gen":
            raise _unknown(ln, "action")
        gens.append(_perm(ln, m))
    if len(gens) != k:
        raise ParseError(f"action declares {k} generators, found {len(gens)}", head.number, 1)
    pres = _invariant(head, GroupPresentation, k, tuple(rels))
    return _invariant(head, FiniteAction, pres, m, tuple(gens))


def _parse_level_action(head, body, space: ProfiniteSpace):
    _expect_args(head, 1)
    k = _int(head.tokens[1], head.number)
    rels, rest = _relators(body, "levelaction")
    pres = _invariant(head, GroupPresentation, k, tuple(rels))
    levels: list[list[Permutation]] = []
    for ln in rest:
        if ln.keyword == "level":
            _expect_args(ln, 1)
            n = _int(ln.tokens[1], ln.number)
            if n != len(levels) + 1:
                raise ParseError(f"expected level {len(levels) + 1}", ln.number, ln.tokens[1][1])
            if n > space.depth:
                raise ParseError(f"level {n} beyond profinite depth {space.depth}", ln.number, 1)
            levels.append([])
        elif ln.keyword == "gen":
            if not levels:
                raise ParseError("'gen' before any 'level' line", ln.number, 1)
            levels[-1].append(_perm(ln, space.size(len(levels))))
        else:
            raise _unknown(ln, "levelaction")
    acts = [_invariant(head, FiniteAction, pres, space.size(n), tuple(g))
            for n, g in enumerate(levels, start=1)]
    return _invariant(head, LevelAction, space, acts)


def _parse_lattice(head, body):
    _expect_args(head, 1)
    n = _int(head.tokens[1], head.number)
    basis, gram = [], []
    for ln in body:
        if ln.keyword == "basis":
            basis.append(_rats(ln))
        elif ln.keyword == "gram":
            gram.append(_rats(ln))
        else:
            raise _unknown(ln, "lattice")
    if basis and gram:
        raise ParseError("give either basis or gram rows, not both", head.number, 1)
    rows = basis or gram
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ParseError(f"lattice {n} needs {n} rows of {n} entries", head.number, 1)
    if basis:
        return _invariant(head, Lattice.from_basis, rows)
    return _invariant(head, Lattice, rows)


def _parse_generators(head, body):
    _expect_args(head, 2)
    k = _int(head.tokens[1], head.number)
    n = _int(head.tokens[2], head.number)
    out = []
    for ln in body:
        kw = ln.keyword
        toks = ln.tokens[1:]
        flag = bool(toks) and toks[-1][0] == "standin"
        if flag:
            toks = toks[:-1]
        if kw == "linear":
            if len(toks) != n * n:
                raise ParseError(f"'linear' takes {n * n} integers", ln.number, 1)
            ints = [_int(t, ln.number) for t in toks]
            out.append(_invariant(ln, TorusIsometry.linear, [ints[i * n:(i + 1) * n] for i in range(n)]))
        elif kw == "rotate":
            if len(toks) != 2:
                raise ParseError("'rotate' takes a coordinate and an angle", ln.number, 1)
            j = _int(toks[0], ln.number)
            if not 0 <= j < n:
                raise ParseError(f"coordinate {j} outside 0..{n - 1}", ln.number, toks[0][1])
            out.append(TorusIsometry.rotation(n, j, _rat(toks[1], ln.number), flag))
        elif kw == "isometry":
            if len(toks) != n * n + n:
                raise ParseError(f"'isometry' takes {n * n} integers and {n} rationals", ln.number, 1)
            ints = [_int(t, ln.number) for t in toks[:n * n]]
            z = [_rat(t, ln.number) for t in toks[n * n:]]
            out.append(_invariant(ln, TorusIsometry, [ints[i * n:(i + 1) * n] for i in range(n)], z, flag))
        else:
            raise _unknown(ln, "generators")
    if len(out) != k:
        raise ParseError(f"generators declares {k} entries, found {len(out)}", head.number, 1)
    return out


def _parse_point(kind: str, arg: int, ln: Line, start: int = 1):
    toks = ln.tokens[start:]
    if kind == "metric":
        if len(toks) != 1:
            raise ParseError("metric points are single integers", ln.number, 1)
        return _int(toks[0], ln.number)
    if kind == "profinite":
        if len(toks) != arg:
            raise ParseError(f"profinite points are paths of {arg} integers", ln.number, 1)
        return tuple(_int(t, ln.number) for t in toks)
    if kind == "torus":
        if len(toks) != arg:
            raise ParseError(f"torus points have {arg} coordinates", ln.number, 1)
        return tuple(_rat(t, ln.number) for t in toks)
    if kind == "tori":
        if len(toks) != arg + 1:
            raise ParseError(f"points on tori are a copy index and {arg} coordinates", ln.number, 1)
        return (_int(toks[0], ln.number), tuple(_rat(t, ln.number) for t in toks[1:]))
    raise ParseError(f"unknown ambient kind {kind!r}", ln.number, 1)


def _ambient_header(ln: Line):
    if len(ln.tokens) < 2:
        raise ParseError("missing ambient kind", ln.number, 1)
    kind = ln.tokens[1][0]
    if kind == "metric":
        _expect_args(ln, 1)
        return kind, 0
    if kind in ("profinite", "torus", "tori"):
        _expect_args(ln, 2)
        return kind, _int(ln.tokens[2], ln.number)
    raise ParseError(f"unknown ambient kind {kind!r}", ln.number, ln.tokens[1][1])


def _parse_residue(head, body):
    _expect_args(head, 2)
    m = _int(head.tokens[1], head.number)
    k = _int(head.tokens[2], head.number)
    gens, words, labels = [], [], []
    eps = None
    kind = None
    for ln in body:
        kw = ln.keyword
        if kw == "gen":
            gens.append(_perm(ln, m))
        elif kw == "epsilon":
            _expect_args(ln, 1)
            eps = _rat(ln.tokens[1], ln.number)
        elif kw == "word":
            words.append(_word(ln))
        elif kw == "ambient":
            kind = _ambient_header(ln)
        elif kw == "label":
            if kind is None:
                raise ParseError("'label' before 'ambient'", ln.number, 1)
            labels.append(_parse_point(kind[0], kind[1], ln))
        else:
            raise _unknown(ln, "residue")
    if eps is None:
        raise ParseError("residue needs an 'epsilon' line", head.number, 1)
    if len(gens) != k:
        raise ParseError(f"residue declares {k} generators, found {len(gens)}", head.number, 1)
    act = _invariant(head, FiniteAction, GroupPresentation.free(k), m, tuple(gens))
    return _invariant(head, Residue, act, tuple(labels), eps, tuple(words))


def _parse_witness(head, body):
    kind = _ambient_header(head)
    pts = []
    for ln in body:
        if ln.keyword != "point":
            raise _unknown(ln, "witness")
        pts.append(_parse_point(kind[0], kind[1], ln))
    return kind[0], pts


# ---------------------------------------------------------------------------
# emitters


def format_metric(m: FiniteMetricSpace) -> str:
    lines = [f"metric {m.size}"]
    for row in m.matrix():
        lines.append(" ".join(fmt_rational(x) for x in row))
    return "\n".join(lines) + "\n"


def format_profinite(p: ProfiniteSpace) -> str:
    lines = ["profinite", "levels " + " ".join(map(str, p.level_sizes))]
    for b in p.bonding_maps:
        lines.append("bond " + " ".join(map(str, b)))
    lines.append("scale " + " ".join(fmt_rational(r) for r in p.scale))
    return "\n".join(lines) + "\n"


def format_presentation(p: GroupPresentation) -> str:
    lines = [f"presentation {p.generator_count}"]
    lines += [f"relator {format_word(r)}" for r in p.relators]
    return "\n".join(lines) + "\n"


def format_action(a: FiniteAction) -> str:
    lines = [f"action {a.set_size} {a.generator_count}"]
    lines += [f"relator {format_word(r)}" for r in a.presentation.relators]
    lines += [f"gen {g.to_cycle_string()}" for g in a.generator_images]
    return "\n".join(lines) + "\n"


def format_level_action(la: LevelAction, with_space: bool = True) -> str:
    out = format_profinite(la.space) if with_space else ""
    lines = [f"levelaction {la.presentation.generator_count}"]
    lines += [f"relator {format_word(r)}" for r in la.presentation.relators]
    for n, a in enumerate(la.actions, start=1):
        lines.append(f"level {n}")
        lines += [f"gen {g.to_cycle_string()}" for g in a.generator_images]
    return out + "\n".join(lines) + "\n"


def format_lattice(l: Lattice) -> str:
    n = l.dimension
    lines = [f"lattice {n}"]
    if l.basis is not None:
        lines += ["basis " + " ".join(fmt_rational(x) for x in b) for b in l.basis]
    else:
        lines += ["gram " + " ".join(fmt_rational(x) for x in row) for row in l.gram]
    return "\n".join(lines) + "\n"


def format_generators(gens, n: int) -> str:
    lines = [f"generators {len(gens)} {n}"]
    for g in gens:
        flag = " standin" if g.stand_in else ""
        coord = g.rotation_coordinate()
        if g.is_linear() and not g.stand_in:
            lines.append("linear " + " ".join(str(x) for row in g.finite_part for x in row))
        elif coord is not None and coord >= 0:
            lines.append(f"rotate {coord} {fmt_rational(g.translation[coord])}{flag}")
        else:
            lines.append("isometry " + " ".join(str(x) for row in g.finite_part for x in row) + " "
                         + " ".join(fmt_rational(x) for x in g.translation) + flag)
    return "\n".join(lines) + "\n"


def ambient_kind(labels) -> tuple[str, int]:
    """Infer the ambient tag of residue labels."""
    if not labels:
        return "metric", 0
    z = labels[0]
    if isinstance(z, int):
        return "metric", 0
    if isinstance(z, tuple) and len(z) == 2 and isinstance(z[0], int) and isinstance(z[1], tuple):
        return "tori", len(z[1])
    if isinstance(z, tuple) and all(isinstance(c, Fraction) for c in z):
        return "torus", len(z)
    if isinstance(z, tuple) and all(isinstance(c, int) for c in z):
        return "profinite", len(z)
    raise TypeError(f"labels of type {type(z).__name__} have no text form")


def format_point(z: Any, kind: str) -> str:
    if kind == "metric":
        return str(z)
    if kind == "profinite":
        return " ".join(map(str, z))
    if kind == "torus":
        return " ".join(fmt_rational(c) for c in z)
    if kind == "tori":
        return f"{z[0]} " + " ".join(fmt_rational(c) for c in z[1])
    raise ValueError(kind)


def format_residue(r: Residue) -> str:
    kind, arg = ambient_kind(r.labels)
    lines = [f"residue {r.size} {r.action.generator_count}"]
    lines += [f"gen {g.to_cycle_string()}" for g in r.action.generator_images]
    lines.append(f"epsilon {fmt_rational(r.epsilon)}")
    lines += [f"word {format_word(w)}" for w in r.words]
    lines.append(f"ambient {kind}" + (f" {arg}" if kind != "metric" else ""))
    lines += [f"label {format_point(z, kind)}" for z in r.labels]
    return "\n".join(lines) + "\n"


def format_witness(points, kind: str, arg: int = 0) -> str:
    lines = [f"witness {kind}" + (f" {arg}" if kind != "metric" else "")]
    lines += [f"point {format_point(z, kind)}" for z in points]
    return "\n".join(lines) + "\n"


def dumps(obj) -> str:
    """Text for any supported object."""
    if isinstance(obj, FiniteMetricSpace):
        return format_metric(obj)
    if isinstance(obj, ProfiniteSpace):
        return format_profinite(obj)
    if isinstance(obj, GroupPresentation):
        return format_presentation(obj)
    if isinstance(obj, FiniteAction):
        return format_action(obj)
    if isinstance(obj, LevelAction):
        return format_level_action(obj)
    if isinstance(obj, Lattice):
        return format_lattice(obj)
    if isinstance(obj, Residue):
        return format_residue(obj)
    raise TypeError(f"no text form for {type(obj).__name__}")
