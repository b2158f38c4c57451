"""Fractional telegraph equations with variable-exponent nonlinearity.

Discrete psi-Riemann-Liouville integrals and psi-Hilfer derivatives, a
Galerkin solver for the damped p(x)-Laplacian wave equation built on them,
the matching static minimization problem, and diagnostics for the energy
and decay estimates of the model.
"""

from fractel.frac_ops import (
    FracOrder,
    OperatorMatrix,
    Side,
    assemble_hilfer_matrix,
    assemble_integral_matrix,
    frac_derivative,
    frac_integral,
    integration_by_parts_residual,
)
from fractel.grid import IDENTITY, Cells, Grid, GridFunction, PsiKind, PsiMap, make_psi_map, parse_psi
from fractel.stationary import StationaryResult, solve_stationary, stationary_energy, stationary_gradient
from fractel.telegraph import (
    ProblemSetup,
    SimulationError,
    SimulationState,
    Trajectory,
    energy,
    galerkin_rhs,
    project_initial,
    simulate,
    stable_dt,
    step,
)
from fractel.varexp import (
    ConjugateExponentField,
    ExponentField,
    conjugate,
    holder_bound_check,
    luxemburg_norm,
    modular,
    modular_norm_relation_check,
    poincare_constant_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "IDENTITY",
    "Cells",
    "ConjugateExponentField",
    "ExponentField",
    "FracOrder",
    "Grid",
    "GridFunction",
    "OperatorMatrix",
    "ProblemSetup",
    "PsiKind",
    "PsiMap",
    "Side",
    "SimulationError",
    "SimulationState",
    "StationaryResult",
    "Trajectory",
    "assemble_hilfer_matrix",
    "assemble_integral_matrix",
    "conjugate",
    "energy",
    "frac_derivative",
    "frac_integral",
    "galerkin_rhs",
    "holder_bound_check",
    "integration_by_parts_residual",
    "luxemburg_norm",
    "make_psi_map",
    "modular",
    "modular_norm_relation_check",
    "parse_psi",
    "poincare_constant_estimate",
    "project_initial",
    "simulate",
    "solve_stationary",
    "stable_dt",
    "stationary_energy",
    "stationary_gradient",
    "step",
]
