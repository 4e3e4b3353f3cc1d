"""Variational fracture on a periodic brittle matrix with soft squares.

The package discretizes a scalar displacement on a square lattice whose
conductance drops to the period inside a chessboard of soft square
inclusions.  Cracks are sets of broken lattice elements scored by the
exact length of their dual segments; minimum cuts, explicit zig-zag
competitors, alternating descent, a brute-force oracle, and a
quasistatic irreversible evolution all operate on that one model.
"""

from .errors import CapacityError, ConfigError, ConvergenceError
from .geometry import MicroGeometry
from .lattice import (BoundaryCondition, LatticeModel, apply_bc,
                      build_lattice)
from .solver import (CrackState, DisplacementField, EnergyBreakdown,
                     crack_region_lengths, energy, jump_profile,
                     solve_displacement)
from .optimizer import (CutQuery, DensityEstimate, alternate_minimize,
                        brute_force_oracle, default_t_grid,
                        min_cut_perforation, run_cut_query, sweep_density,
                        straight_crack_construction, zigzag_construction)
from .evolution import (EvolutionTrace, LoadProgram, LocalizationReport,
                        default_program, localize, run_evolution,
                        toughening_gap)

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "CapacityError",
    "ConfigError",
    "ConvergenceError",
    "CrackState",
    "CutQuery",
    "DensityEstimate",
    "DisplacementField",
    "EnergyBreakdown",
    "EvolutionTrace",
    "LatticeModel",
    "LoadProgram",
    "LocalizationReport",
    "MicroGeometry",
    "alternate_minimize",
    "apply_bc",
    "brute_force_oracle",
    "build_lattice",
    "crack_region_lengths",
    "default_program",
    "default_t_grid",
    "energy",
    "jump_profile",
    "localize",
    "min_cut_perforation",
    "run_cut_query",
    "run_evolution",
    "solve_displacement",
    "straight_crack_construction",
    "sweep_density",
    "toughening_gap",
    "zigzag_construction",
]
