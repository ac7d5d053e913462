"""
Rebuilding a tree action as an odometer
=======================================

A level-preserving action on a finite rooted tree is also an isometric
action on its leaves with the tree ultrametric.  Clustering the leaves at
every distance value recovers the whole tower of finite quotients.
"""

from rfaction.groups import FiniteAction, parse_cycles
from rfaction.odometer import build_odometer, check_conjugacy, distance_schedule, is_minimal
from rfaction.spaces import halving_scale, tree_space, truncate

# binary tree of depth 3; leaves are 0..7 and the scale halves per level
tree = tree_space([2, 2, 2], halving_scale(3))
leaves = truncate(tree, 3)
print("distance values:", [str(r) for r in distance_schedule(leaves)])

# the adding machine: add one at the top digit and carry toward the leaves
add_one = parse_cycles("(0 4 2 6 1 5 3 7)", 8)
action = FiniteAction.free(8, [add_one])

odo = build_odometer(leaves, action, distance_schedule(leaves))
for n, level in enumerate(odo.action.actions, start=1):
    print(f"level {n}: {level.set_size} blocks, generator {level.generator_images[0]}")

# one orbit at every level, so the limit action is minimal
print("minimal:", is_minimal(odo))

# at each level the block map moves a point by less than the threshold
for n in range(1, odo.depth + 1):
    print(f"conjugacy defect at level {n}:", check_conjugacy(odo, leaves, action, n))

# a non-transitive example: swap sibling leaves only, so the top levels stay fixed
swap = FiniteAction.free(8, [parse_cycles("(0 1)(2 3)(4 5)(6 7)", 8)])
odo2 = build_odometer(leaves, swap, distance_schedule(leaves))
ok, witness = is_minimal(odo2)
print("swap only minimal:", ok, "witness (level, point, point):", witness)
