"""Galerkin solvers for the Kolmogorov equation and the modified invariant measure."""

from .kolmogorov import (
    HierarchyTrajectory,
    SpectralConfig,
    average,
    hierarchy,
    mixing_rate,
    modified_residual,
    propagate,
    solve_poisson_adjoint,
    stationary_density,
    v_truncated,
)
from .measures import MeasureExpansion, expectation_under, modified_density, mu_hierarchy, residual_G

__all__ = [
    "HierarchyTrajectory",
    "MeasureExpansion",
    "SpectralConfig",
    "average",
    "expectation_under",
    "hierarchy",
    "mixing_rate",
    "modified_density",
    "modified_residual",
    "mu_hierarchy",
    "propagate",
    "residual_G",
    "solve_poisson_adjoint",
    "stationary_density",
    "v_truncated",
]
