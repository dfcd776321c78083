"""Particle grids, magnetic Schroedinger operators, the full coupled operator and solvers."""
from .grid import ParticleGrid, pauli_matrices
from .operators import (MSOOperator, assemble_effective, assemble_Heps, dirichlet_laplacian,
                        link_matrix)
from .pauli_fierz import (BudgetError, PFOperator, assemble_full_PF,
                          coherent_superposition_expectation)
from .solvers import (ConvergenceError, SpectralReport, apply_resolvent, default_shift,
                      lowest_eigs, resolvent_gap)

__all__ = [
    "ParticleGrid", "pauli_matrices", "MSOOperator", "assemble_effective", "assemble_Heps",
    "dirichlet_laplacian", "link_matrix", "BudgetError", "PFOperator", "assemble_full_PF",
    "coherent_superposition_expectation", "ConvergenceError", "SpectralReport",
    "apply_resolvent", "default_shift", "lowest_eigs", "resolvent_gap",
]
