"""Modified Kolmogorov operators for the Euler scheme on the circle.

Builds the modified generator and modified invariant measure of the
Euler-Maruyama discretization of a scalar SDE on the 1-D torus and checks
their orders against a Gaussian transition-kernel oracle and Monte Carlo.
"""

__version__ = "0.1.0"
__all__ = ["__version__"]
