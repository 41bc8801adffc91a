"""Holomorphic function calculus on step-two complex nilpotent groups:
group algebra, left-invariant derivatives, heat expectations, derivative
tensors, diffusion Monte Carlo, projections, and growth bounds."""

from .group import (
    GroupConfig,
    GroupElement,
    group_mul,
    group_inv,
    bracket,
    rho_sq,
    omega_uniform_norm,
    k_omega,
)
from .poly import Polynomial, parse_poly, lid, apply_L, heat_expectation
from .fock import (
    FockTensor,
    taylor,
    inverse_taylor,
    fock_norm_sq,
    fock_inner,
    j0_residual,
    grading_pullback,
    fejer_truncate,
)
from .mc import (
    MCParams,
    MCEstimate,
    BrownianPath,
    GroupPath,
    sample_path,
    group_path,
    heat_mc,
    skeleton_mc,
    heat_sweep,
    skeleton_sweep,
    heat_mc_grid,
    iterated_integrals,
    chaos_eval,
    chaos_isometry_mc,
    chaos_residual,
    gaussian_moment_check,
    lp_norm_mc,
)
from .projection import (
    Projection,
    pi_p,
    gamma_defect,
    k_p,
    compose_with_projection,
    kappa,
    pullback_taylor,
    projection_convergence,
)
from .geometry import (
    CMPath,
    path_length,
    distance_upper,
    c_factor,
    bargmann_check,
    gaussian_bound_check,
)

__all__ = [
    "GroupConfig",
    "GroupElement",
    "group_mul",
    "group_inv",
    "bracket",
    "rho_sq",
    "omega_uniform_norm",
    "k_omega",
    "Polynomial",
    "parse_poly",
    "lid",
    "apply_L",
    "heat_expectation",
    "FockTensor",
    "taylor",
    "inverse_taylor",
    "fock_norm_sq",
    "fock_inner",
    "j0_residual",
    "grading_pullback",
    "fejer_truncate",
    "MCParams",
    "MCEstimate",
    "BrownianPath",
    "GroupPath",
    "sample_path",
    "group_path",
    "heat_mc",
    "skeleton_mc",
    "heat_sweep",
    "skeleton_sweep",
    "heat_mc_grid",
    "iterated_integrals",
    "chaos_eval",
    "chaos_isometry_mc",
    "chaos_residual",
    "gaussian_moment_check",
    "lp_norm_mc",
    "Projection",
    "pi_p",
    "gamma_defect",
    "k_p",
    "compose_with_projection",
    "kappa",
    "pullback_taylor",
    "projection_convergence",
    "CMPath",
    "path_length",
    "distance_upper",
    "c_factor",
    "bargmann_check",
    "gaussian_bound_check",
]

__version__ = "0.1.0"
