"""
Matrix blocks of a finite crossed product
=========================================

For a finite group acting on a finite set, the crossed product splits into
one block per orbit: a matrix algebra of the orbit size tensored with the
group algebra of a stabilizer.  Along a tower of quotients, each block
lands inside a block of the next level.
"""

from rfaction.crossed import (block_decomposition, connecting_data,
                              decomposition_symbol, render_limit_skeleton)
from rfaction.groups import FiniteAction, parse_cycles
from rfaction.spaces import adding_machine

# Z/2 swapping two of three points
z2 = FiniteAction.free(3, [parse_cycles("(0 1)", 3)])
bd = block_decomposition(z2)
print(decomposition_symbol(bd))
for b in bd.blocks:
    print(f"  orbit {b.orbit} size {b.orbit_size}, stabilizer order {b.stabilizer_order}")
print("dimension", bd.dimension(), "= |E| |G| =", z2.set_size * bd.group_order)

# S3 on three points: one orbit with a Z/2 stabilizer
s3 = FiniteAction.free(3, [parse_cycles("(0 1 2)", 3), parse_cycles("(0 1)", 3)])
print("\nS3:", decomposition_symbol(block_decomposition(s3)))

# the adding machine tower: each level is a single full matrix algebra
cd = connecting_data(adding_machine(4))
print()
print(render_limit_skeleton(cd), end="")
print("every stabilizer contained in the next:", cd.all_contained)
