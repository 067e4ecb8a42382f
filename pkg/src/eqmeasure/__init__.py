"""Attractive-repulsive power-law equilibrium measures on d-dimensional balls.

Radial Jacobi (generalized Zernike) bases turn the power-law potential into
banded or approximately banded operators generated by recurrence; the
measure and its support radius follow from a regularized linear solve, mass
normalization, and a one-dimensional radius optimization.
"""

from .analytic import AnalyticSolution, alpha2_solution, alpha4_solution, gap_onset_beta
from .jacobi import (
    BasisSpec,
    CoefficientVector,
    QuadratureRule,
    choose_basis,
    conversion_operator,
    eval_radial,
    evaluate_expansion,
    gauss_jacobi_rule,
    mass_functional,
    multiplication_operator,
    project,
)
from .operators import (
    PotentialOperator,
    build_operator,
    column_recurrence_coeffs,
    diagonal_entry,
    seed_column,
    tridiagonal_column,
)
from .oracles import (
    ParticleState,
    combined_potential,
    particle_simulate,
    potential_quadrature,
    radial_histogram,
)
from .solver import (
    Measure,
    NoFeasibleMinimumError,
    ProblemParams,
    SolveReport,
    SolverConfig,
    assemble,
    build_operator_pair,
    energy_scan,
    evaluate_measure,
    gap_scan,
    minimize_radius,
    solve_fixed_radius,
)
from .specfun import HypergeometricArgs, beta, gauss_2f1, ln_gamma, pochhammer, reciprocal_gamma

__version__ = "0.1.0"
