"""
Finite residues of torus rotations
==================================

A rotation of the flat torus by a rational angle permutes a fine enough
grid exactly.  An irrational angle never does, but a nearby grid rotation
moves every grid point by less than any chosen epsilon.
"""

from fractions import Fraction

from rfaction.residue import verify_residue
from rfaction.torus import (FlatTorus, Lattice, TorusAmbient, TorusIsometry,
                            build_torus_residue, covering_radius_sq, lattice_automorphisms)

square = FlatTorus(Lattice.standard(2))
hexagonal = FlatTorus(Lattice([[1, Fraction(1, 2)], [Fraction(1, 2), 1]]))

print("square symmetries:", len(lattice_automorphisms(square.lattice)))
print("hexagonal symmetries:", len(lattice_automorphisms(hexagonal.lattice)))
print("hexagonal covering radius squared:", covering_radius_sq(hexagonal.lattice))

# quarter turn in the first coordinate: the grid denominator absorbs the 4
quarter = [TorusIsometry.rotation(2, 0, Fraction(1, 4))]
tr = build_torus_residue(square, quarter, Fraction(1, 2))
print(f"\nrational rotation: N={tr.modulus}, defect^2={tr.max_defect_sq}, passed={tr.passed}")

# 355/113 stands in for pi; the grid is chosen without its denominator
pi_ish = TorusIsometry.rotation(2, 1, Fraction(355, 113), stand_in=True)
flip = TorusIsometry.linear(((-1, 0), (0, -1)))
tr = build_torus_residue(square, [flip, pi_ish], Fraction(1, 5))
print(f"stand-in rotation: N={tr.modulus}, defect^2={tr.max_defect_sq}")
print(f"  density^2={tr.density_radius_sq} <= bound {tr.density_bound_sq}, passed={tr.passed}")

# independent check point by point
rep = verify_residue(tr.residue, TorusAmbient(square, [flip, pi_ish]),
                     witnesses=[(Fraction(1, 7), Fraction(3, 5))])
print("pointwise verification:", rep.passed, rep.max_defect_sq == tr.max_defect_sq)
