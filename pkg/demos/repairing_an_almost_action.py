"""
Repairing an almost action
==========================

An involution on a binary tree is perturbed far down the tree, so the
relator a^2 fails only between leaves that are already very close.  The
action descends to the levels above the perturbation, and lifting it back
with the identity on the lower digits gives an exact action nearby.
"""

from rfaction.groups import GroupPresentation, Permutation, parse_word
from rfaction.spaces import halving_scale, tree_space
from rfaction.stability import (AlmostAction, descends, relator_defect, repair,
                                repair_schedule)

depth = 4
tree = tree_space([2] * depth, halving_scale(depth))
involution = GroupPresentation(1, (parse_word("a a"),))


def automorphism(portrait):
    """Leaf permutation from child swaps keyed by ``(level, vertex)``; level 0 is the root."""
    images = []
    for x in range(2**depth):
        digits = [(x >> (depth - 1 - k)) & 1 for k in range(depth)]
        out, vertex = [], 0
        for k, d in enumerate(digits):
            out.append(1 - d if (k, vertex) in portrait else d)
            vertex = 2 * vertex + d
        images.append(int("".join(map(str, out)), 2))
    return Permutation(images)


def swap_with_twist(level):
    # swap the halves, plus one extra swap under the leftmost vertex of ``level``
    return automorphism({(0, 0), (level, 0)})


bad = AlmostAction(tree, involution, [swap_with_twist(3)])
print("relator defect:", relator_defect(bad))
print("descends at levels:", [n for n in range(1, depth + 1) if descends(bad, n)])

res = repair(bad, 3)
g = res.exact_action.level(depth).generator_images[0]
print(f"repaired at level {res.level_used}: exact={(g * g).is_identity()}, "
      f"moved {res.measured_distance} <= {res.distance_bound}")

# deeper perturbations allow deeper repairs and smaller bounds
seq = [AlmostAction(tree, involution, [swap_with_twist(k)]) for k in (1, 2, 3)]
for k, entry in zip((1, 2, 3), repair_schedule(seq)):
    print(f"twist at level {k}: defect {entry.relator_defects[0]}, repair level {entry.level}, "
          f"bound {entry.distance_bound}")
