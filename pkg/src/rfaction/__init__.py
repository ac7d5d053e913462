"""Finite approximations of isometric group actions.

Odometers for isometric actions on finite and profinite spaces, grid
residues for isometries of flat tori, crossed-product block structure of
finite actions, and repair of almost actions into exact ones.
"""

from .groups import (ClosureBudgetExceeded, FiniteAction, GroupPresentation,
                     Permutation, Subgroup, Word, evaluate_word, free_reduce,
                     orbits, parse_cycles, parse_word, stabilizer,
                     subgroup_contains)
from .spaces import (FiniteMetricSpace, LevelAction, ProfiniteSpace,
                     adding_machine, average_metric, check_metric,
                     profinite_metric, tree_space, truncate)
from .odometer import (build_odometer, check_conjugacy, distance_schedule,
                       induced_action, is_minimal, r_components)
from .residue import (Filtration, IsometryGroupAmbient, MetricAmbient,
                      ProfiniteAmbient, Residue, pullback_residue,
                      pushforward_residue, verify_local_density,
                      verify_residue)
from .torus import (FlatTorus, Lattice, LatticePointSet, TorusAmbient,
                    TorusIsometry, build_orbit_closure_residue,
                    build_torus_residue, choose_modulus, decompose_isometry,
                    lattice_automorphisms, torus_distance)
from .crossed import block_decomposition, connecting_data, render_limit_skeleton
from .stability import (AlmostAction, descend_level, relator_defect, repair,
                        repair_schedule)

__version__ = "0.1.0"
