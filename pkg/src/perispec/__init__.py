"""Space-time periodic parabolic eigenvalue problems: discretization,
adjoint gradients, rearrangement-constrained optimization, and the
closed-form asymptotic machinery used to validate them."""

from .grid import SpaceTimeGrid, ScalarField, TimeProfile, SpaceProfile
from .grid import outer_product, field_mean
from .pde_ops import BlockParabolicOperator, solve_direct, solve_adjoint
from .eigensolver import EigenPair, principal_eigenpair
from .rearrangement import (
    RearrangementBody1D,
    RearrangementBody2D,
    symmetric_decreasing_rearrangement,
    rearrangement_values,
    dominates,
    body_from_profile,
    body_from_field,
    reconstruct_profile,
    reconstruct_field,
    aligned_l2_distance,
)
from .projections import (
    project_box_mean,
    project_rearrangement_1d,
    project_rearrangement_2d,
)
from .objectives import (
    ObjectiveEval,
    eval_talenti,
    eval_eigenvalue,
    field_gradient_to_profile,
    symmetry_anchor,
    symmetry_certificate,
    asymmetry_measure,
)
from .optimizer import OptimizerConfig, OptimizerTrace, run, uniform_start
from .gaussian import (
    RiccatiSolution,
    GaussianEigen,
    solve_riccati_periodic,
    gaussian_eigenvalue,
)
from .asymptotics import SweepTable, capital_lambda, mu_sweep, epsilon_sweep

__all__ = [
    "SpaceTimeGrid",
    "ScalarField",
    "TimeProfile",
    "SpaceProfile",
    "outer_product",
    "field_mean",
    "BlockParabolicOperator",
    "solve_direct",
    "solve_adjoint",
    "EigenPair",
    "principal_eigenpair",
    "RearrangementBody1D",
    "RearrangementBody2D",
    "symmetric_decreasing_rearrangement",
    "rearrangement_values",
    "dominates",
    "body_from_profile",
    "body_from_field",
    "reconstruct_profile",
    "reconstruct_field",
    "aligned_l2_distance",
    "project_box_mean",
    "project_rearrangement_1d",
    "project_rearrangement_2d",
    "ObjectiveEval",
    "eval_talenti",
    "eval_eigenvalue",
    "field_gradient_to_profile",
    "symmetry_anchor",
    "symmetry_certificate",
    "asymmetry_measure",
    "OptimizerConfig",
    "OptimizerTrace",
    "run",
    "uniform_start",
    "RiccatiSolution",
    "GaussianEigen",
    "solve_riccati_periodic",
    "gaussian_eigenvalue",
    "SweepTable",
    "capital_lambda",
    "mu_sweep",
    "epsilon_sweep",
]
