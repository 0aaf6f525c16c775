"""Deterministic transition-kernel oracle and Monte Carlo simulation of the Euler scheme."""

from .kernel import (
    TransitionKernel,
    numerical_invariant,
    one_step_expectation,
    transition_matrix,
    weak_error_curve,
)
from .monte_carlo import McConfig, WeakEstimate, ergodic_average, euler_step, weak_estimate

__all__ = [
    "McConfig",
    "TransitionKernel",
    "WeakEstimate",
    "ergodic_average",
    "euler_step",
    "numerical_invariant",
    "one_step_expectation",
    "transition_matrix",
    "weak_error_curve",
    "weak_estimate",
]
