"""Block structure of crossed products of finite actions.

For a group acting on a finite set ``E``, the crossed product of ``C(E)``
splits into one matrix block per orbit: an orbit of size ``k`` whose points
have stabilizer ``H`` contributes ``M_k(C*(H))``.  Stabilizers are taken in
the finite image of the group in ``Sym(E)``.

For an inverse sequence of actions the blocks at consecutive levels are
linked through the bonding maps, and the stabilizer of a deeper point is
contained in the stabilizer of its image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .groups import (DEFAULT_CLOSURE_BUDGET, FiniteAction, Permutation,
                     Subgroup, closure, orbits, stabilizer_in,
                     subgroup_contains)
from .spaces import EquivarianceError, LevelAction, equivariance_witness


@dataclass(frozen=True)
class Block:
    orbit_representative: int
    orbit: tuple[int, ...]
    stabilizer: Subgroup

    @property
    def orbit_size(self) -> int:
        return len(self.orbit)

    @property
    def stabilizer_order(self) -> int:
        return self.stabilizer.order()


@dataclass(frozen=True)
class BlockDecomposition:
    set_size: int
    group_order: int
    blocks: tuple[Block, ...]

    def dimension(self) -> int:
        """``sum |orbit|^2 * |stabilizer|``."""
        return sum(b.orbit_size**2 * b.stabilizer_order for b in self.blocks)

    def check(self) -> None:
        if sum(b.orbit_size for b in self.blocks) != self.set_size:
            raise AssertionError("orbit sizes do not add up to the set size")
        for b in self.blocks:
            if b.orbit_size * b.stabilizer_order != self.group_order:
                raise AssertionError(f"orbit-stabilizer fails at point {b.orbit_representative}")
        if self.dimension() != self.set_size * self.group_order:
            raise AssertionError("dimension identity fails")

    def block_of(self, x: int) -> int:
        for i, b in enumerate(self.blocks):
            if x in b.orbit:
                return i
        raise IndexError(x)


def block_decomposition(a: FiniteAction, budget: int = DEFAULT_CLOSURE_BUDGET) -> BlockDecomposition:
    """One block per orbit, represented by its least point."""
    group = closure(a.generator_images, a.set_size, budget)
    blocks = []
    for orb in orbits(a):
        e = orb[0]
        stab = stabilizer_in(a.generator_images, a.set_size, e, budget, group)
        blocks.append(Block(e, orb, stab))
    bd = BlockDecomposition(a.set_size, len(group), tuple(blocks))
    bd.check()
    return bd


@dataclass(frozen=True)
class Certificate:
    level: int            # shallower level n
    deep_block: int       # block index at level n + 1
    shallow_block: int    # block index at level n
    deep_point: int       # representative e' at level n + 1
    shallow_point: int    # its bonding image e at level n
    contained: bool


@dataclass(frozen=True)
class ConnectingData:
    decompositions: tuple[BlockDecomposition, ...]
    block_maps: tuple[tuple[int, ...], ...]
    certificates: tuple[Certificate, ...]

    @property
    def all_contained(self) -> bool:
        return all(c.contained for c in self.certificates)


def _descend(space, n: int, g: Permutation) -> Permutation:
    """The level-``n`` permutation that ``g`` (at level ``n + 1``) induces."""
    bond = space.bonding_maps[n - 1]
    img = [-1] * space.size(n)
    for x, y in enumerate(g.images):
        bx = bond[x]
        if img[bx] == -1:
            img[bx] = bond[y]
        elif img[bx] != bond[y]:
            raise EquivarianceError(f"element does not descend from level {n + 1} to {n}", (None, n, x))
    return Permutation(img)


def connecting_data(la: LevelAction, budget: int = DEFAULT_CLOSURE_BUDGET) -> ConnectingData:
    """Block maps between consecutive levels and stabilizer containment certificates.

    For each block at level ``n + 1`` with representative ``e'`` and
    ``e = bond(e')``, the stabilizer of ``e`` at level ``n`` is lifted to
    the level ``n + 1`` image group (elements whose descent fixes ``e``),
    and the certificate records whether it contains the stabilizer of
    ``e'``.
    """
    w = equivariance_witness(la.space, la.actions)
    if w is not None:
        g, n, x = w
        raise EquivarianceError(f"generator {g} is not equivariant between levels {n + 1} "
                                f"and {n} at point {x}", w)
    space = la.space
    decs = [block_decomposition(a, budget) for a in la.actions]
    maps = []
    certs = []
    for n in range(1, la.depth):
        lo, hi = decs[n - 1], decs[n]
        deep_group = sorted(closure(la.actions[n].generator_images, space.size(n + 1), budget))
        descents = [(g, _descend(space, n, g)) for g in deep_group]
        bmap = []
        for bi, blk in enumerate(hi.blocks):
            e2 = blk.orbit_representative
            e = space.bond(n + 1, e2)
            target = lo.block_of(e)
            bmap.append(target)
            lifted = frozenset(g for g, d in descents if d[e] == e)
            lift = Subgroup(space.size(n + 1), tuple(sorted(lifted)), lifted)
            ok = subgroup_contains(lift, blk.stabilizer, budget)
            certs.append(Certificate(n, bi, target, e2, e, ok))
        maps.append(tuple(bmap))
    cd = ConnectingData(tuple(decs), tuple(maps), tuple(certs))
    bad = [c for c in certs if not c.contained]
    if bad:
        c = bad[0]
        raise AssertionError(f"stabilizer of {c.deep_point} at level {c.level + 1} is not "
                             f"contained in the lifted stabilizer of {c.shallow_point}")
    return cd


# ---------------------------------------------------------------------------
# rendering


def group_name(h: Subgroup) -> str:
    k = h.order()
    if k == 1:
        return "1"
    if h.is_cyclic():
        return f"Z/{k}"
    return f"H{k}"


def block_symbol(b: Block) -> str:
    k, h = b.orbit_size, b.stabilizer
    if h.order() == 1:
        return "C" if k == 1 else f"M_{k}(C)"
    inner = f"C*({group_name(h)})"
    return inner if k == 1 else f"M_{k}({inner})"


def decomposition_symbol(bd: BlockDecomposition) -> str:
    return " ⊕ ".join(block_symbol(b) for b in bd.blocks)


def _block_record(b: Block) -> dict:
    return {
        "representative": b.orbit_representative,
        "orbit_size": b.orbit_size,
        "stabilizer_order": b.stabilizer_order,
        "stabilizer_generators": [g.to_cycle_string() for g in b.stabilizer.generating_permutations],
        "symbol": block_symbol(b),
    }


def render_decomposition(bd: BlockDecomposition, fmt: str = "pretty") -> str:
    if fmt == "machine":
        lines = [f"set_size={bd.set_size}", f"group_order={bd.group_order}",
                 f"blocks={len(bd.blocks)}", f"dimension={bd.dimension()}"]
        for i, b in enumerate(bd.blocks):
            r = _block_record(b)
            lines.append(f"block.{i}.representative={r['representative']}")
            lines.append(f"block.{i}.orbit_size={r['orbit_size']}")
            lines.append(f"block.{i}.stabilizer_order={r['stabilizer_order']}")
            lines.append(f"block.{i}.stabilizer_generators={' '.join(r['stabilizer_generators']) or '()'}")
            lines.append(f"block.{i}.symbol={r['symbol']}")
        lines.append(f"algebra={decomposition_symbol(bd)}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps({"set_size": bd.set_size, "group_order": bd.group_order,
                           "blocks": [_block_record(b) for b in bd.blocks]},
                          sort_keys=True, ensure_ascii=False) + "\n"
    out = [f"{decomposition_symbol(bd)}",
           f"  |E| = {bd.set_size}, |image| = {bd.group_order}, "
           f"dimension {bd.dimension()} = {bd.set_size}*{bd.group_order}"]
    for b in bd.blocks:
        gens = " ".join(g.to_cycle_string() for g in b.stabilizer.generating_permutations) or "()"
        out.append(f"  orbit of {b.orbit_representative}: size {b.orbit_size}, "
                   f"stabilizer order {b.stabilizer_order} generated by {gens}")
    return "\n".join(out) + "\n"


def render_limit_skeleton(cd: ConnectingData, fmt: str = "pretty") -> str:
    """Per-level block listing and the block maps with their certificates."""
    if fmt == "machine":
        lines = [f"levels={len(cd.decompositions)}"]
        for n, bd in enumerate(cd.decompositions, start=1):
            lines.append(f"level.{n}.algebra={decomposition_symbol(bd)}")
            lines.append(f"level.{n}.group_order={bd.group_order}")
            for i, b in enumerate(bd.blocks):
                lines.append(f"level.{n}.block.{i}=orbit:{b.orbit_size} "
                             f"stabilizer:{b.stabilizer_order} symbol:{block_symbol(b)}")
        for n, bmap in enumerate(cd.block_maps, start=1):
            lines.append(f"bond.{n + 1}->{n}=" + " ".join(map(str, bmap)))
        for c in cd.certificates:
            lines.append(f"certificate.{c.level + 1}->{c.level}.{c.deep_block}="
                         f"{'true' if c.contained else 'false'}")
        lines.append(f"all_contained={'true' if cd.all_contained else 'false'}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps({
            "levels": [[_block_record(b) for b in bd.blocks] for bd in cd.decompositions],
            "block_maps": [list(m) for m in cd.block_maps],
            "certificates": [c.__dict__ for c in cd.certificates],
        }, sort_keys=True, ensure_ascii=False) + "\n"
    out = []
    for n, bd in enumerate(cd.decompositions, start=1):
        out.append(f"level {n}: {decomposition_symbol(bd)}   (|image| = {bd.group_order})")
    out.append(" -> ".join(f"[{decomposition_symbol(bd)}]" for bd in cd.decompositions))
    for n, bmap in enumerate(cd.block_maps, start=1):
        out.append(f"bond {n + 1}->{n}: " + ", ".join(f"{i}->{j}" for i, j in enumerate(bmap)))
    for c in cd.certificates:
        out.append(f"  stab_{c.level + 1}({c.deep_point}) <= stab_{c.level}({c.shallow_point}): "
                   f"{'yes' if c.contained else 'NO'}")
    return "\n".join(out) + "\n"
