"""Exact one-step law of the Euler scheme on a periodic grid.

The Euler increment is Gaussian given the current state, so expectations are
computed with Gauss-Hermite quadrature and off-grid values with trigonometric
cardinal functions. Nothing here is random.
"""

import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import eigvals

from ..algebra.trigpoly import GridFunction, TrigPoly, grid_nodes
from ..exceptions import NoConvergence, RowSumViolation
from ..expansion.models import SdeModel
from ..expansion.operators import build_expansion, generator
from ..spectral.kolmogorov import SpectralConfig, hierarchy, spectral_gap, stationary_density, v_truncated
from ..spectral.measures import MeasureExpansion, expectation_under, modified_density, mu_hierarchy

logger = logging.getLogger(__name__)

DEFAULT_QUAD_POINTS = 40
MIN_QUAD_POINTS = 20
MAX_QUAD_POINTS = 512
DEFAULT_GRID_SIZE = 33
ROW_SUM_TOLERANCE = 1e-10
INVARIANT_TOLERANCE = 1e-12
MAX_POWER_ITERATIONS = 10**6
ERROR_FLOOR = 1e-13


def gauss_hermite(points: int):
    """Nodes and weights for E g(Z), Z standard normal."""
    z, w = hermegauss(points)
    return z, w / math.sqrt(2.0 * math.pi)


def one_step_expectation(
    model: SdeModel,
    phi: TrigPoly,
    tau: float,
    x: Union[float, np.ndarray],
    Q: int = DEFAULT_QUAD_POINTS,
) -> Union[float, np.ndarray]:
    """E phi(x + tau f(x) + sigma(x) sqrt(tau) Z) by Gauss-Hermite quadrature.

    Args:
        model: The SDE.
        phi: Observable.
        tau: Step size.
        x: Start point(s).
        Q: Number of quadrature nodes (>= 20).

    Returns:
        The expectation at each start point.
    """
    if tau <= 0:
        raise ValueError(f"step size must be positive, got {tau}")
    if Q < MIN_QUAD_POINTS:
        raise ValueError(f"at least {MIN_QUAD_POINTS} quadrature nodes required, got {Q}")
    z, w = gauss_hermite(Q)
    xs = np.asarray(x, dtype=float)
    mean = xs + tau * np.asarray(model.f(xs))
    spread = np.asarray(model.sigma(xs)) * math.sqrt(tau)
    points = mean[..., None] + spread[..., None] * z
    result = np.asarray(phi(points)) @ w
    return float(result) if np.ndim(result) == 0 else result


def required_quad_points(model: SdeModel, tau: float, K_interp: int) -> int:
    """Node count that resolves harmonics up to K_interp after one Gaussian step."""
    return int(math.ceil(1.5 * (K_interp * model.sigma_max * math.sqrt(tau)) ** 2 + 10))


class TransitionKernel(BaseModel):
    """Dense M x M matrix of the one-step Euler law on the uniform grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: SdeModel = Field(..., description="SDE the kernel discretizes")
    tau: float = Field(..., gt=0, description="Step size")
    grid_size: int = Field(..., ge=3, description="Number of grid nodes M")
    quad_points: int = Field(..., description="Requested Gauss-Hermite nodes Q")
    quad_points_used: int = Field(..., description="Nodes actually used after saturation")
    interp_bandwidth: int = Field(..., description="Bandwidth of the cardinal interpolant")
    P: np.ndarray = Field(..., description="Transition matrix, rows index start nodes")

    @property
    def nodes(self) -> np.ndarray:
        return grid_nodes(self.grid_size)

    def cardinal_row(self, x: float) -> np.ndarray:
        """Weights l_j(x) reproducing band-limited functions from grid values."""
        k = np.arange(1, self.interp_bandwidth + 1)
        phase = np.multiply.outer(x - self.nodes, k)
        return (1.0 + 2.0 * np.cos(phase).sum(axis=1)) / self.grid_size


def transition_matrix(
    model: SdeModel,
    tau: float,
    M: int = DEFAULT_GRID_SIZE,
    Q: int = DEFAULT_QUAD_POINTS,
    K_interp: Optional[int] = None,
) -> TransitionKernel:
    """Build P[i, j] = E l_j(x_i + tau f(x_i) + sigma(x_i) sqrt(tau) Z).

    Rows are checked to sum to one and are never renormalized.

    Raises:
        RowSumViolation: If a row sum is off by more than 1e-10.
    """
    K_interp = (M - 1) // 2 if K_interp is None else K_interp
    if M < 2 * K_interp + 1:
        raise ValueError(f"grid of {M} nodes cannot carry interpolation bandwidth {K_interp}")
    if Q < MIN_QUAD_POINTS:
        raise ValueError(f"at least {MIN_QUAD_POINTS} quadrature nodes required, got {Q}")
    used = Q
    needed = required_quad_points(model, tau, K_interp)
    if needed > Q:
        used = min(needed, MAX_QUAD_POINTS)
        logger.debug(f"Gauss-Hermite nodes raised from {Q} to {used} for K_interp={K_interp}")
        if needed > MAX_QUAD_POINTS:
            logger.warning(f"Quadrature capped at {MAX_QUAD_POINTS} nodes (wanted {needed})")

    z, w = gauss_hermite(used)
    x = grid_nodes(M)
    mean = x + tau * model.f(x)
    spread = model.sigma(x) * math.sqrt(tau)
    points = mean[:, None] + spread[:, None] * z[None, :]
    k = np.arange(1, K_interp + 1)
    phase = points[:, :, None] * k[None, None, :]
    e_cos = np.einsum("iqk,q->ik", np.cos(phase), w)
    e_sin = np.einsum("iqk,q->ik", np.sin(phase), w)
    node_phase = np.multiply.outer(k, x)
    P = (1.0 + 2.0 * (e_cos @ np.cos(node_phase) + e_sin @ np.sin(node_phase))) / M

    deviation = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
    if deviation > ROW_SUM_TOLERANCE:
        raise RowSumViolation(f"transition matrix row sums deviate by {deviation:.3e}")
    return TransitionKernel(
        model=model,
        tau=tau,
        grid_size=M,
        quad_points=Q,
        quad_points_used=used,
        interp_bandwidth=K_interp,
        P=P,
    )


def numerical_invariant(
    kernel: TransitionKernel,
    tol: float = INVARIANT_TOLERANCE,
    max_iterations: int = MAX_POWER_ITERATIONS,
) -> GridFunction:
    """Left fixed point pi P = pi by power iteration, returned as a grid density.

    Raises:
        NoConvergence: If successive densities still differ after ``max_iterations``.
    """
    M = kernel.grid_size
    scale = M / (2.0 * math.pi)
    mass = np.full(M, 1.0 / M)
    for iteration in range(1, max_iterations + 1):
        updated = mass @ kernel.P
        change = float(np.max(np.abs(updated - mass))) * scale
        mass = updated
        if change < tol:
            logger.debug(f"Power iteration converged after {iteration} steps")
            return GridFunction(mass * scale / mass.sum())
    raise NoConvergence(f"power iteration did not converge in {max_iterations} steps")


def iterate_law(
    kernel: TransitionKernel, steps: int, start: Optional[np.ndarray] = None
) -> np.ndarray:
    """Grid weights of the law of X_steps, starting from a point mass at x = 0 by default."""
    mass = kernel.cardinal_row(0.0) if start is None else np.asarray(start, dtype=float)
    for _ in range(steps):
        mass = mass @ kernel.P
    return mass


def kernel_expectation(kernel: TransitionKernel, phi: TrigPoly, mass: np.ndarray) -> float:
    """E phi under grid weights ``mass``."""
    return float(mass @ phi(kernel.nodes))


def discrete_mixing_rate(kernel: TransitionKernel) -> float:
    """-log |lambda_2(P)| / tau from the second-largest eigenvalue modulus."""
    moduli = np.sort(np.abs(eigvals(kernel.P)))[::-1]
    return float(-math.log(moduli[1]) / kernel.tau)


def decay_table(kernel: TransitionKernel, phi: TrigPoly, steps: int) -> List[dict]:
    """|E phi(X_p) - stationary value| for p = 1..steps from a point mass at 0."""
    invariant = numerical_invariant(kernel)
    target = float(np.sum(invariant.values * phi(kernel.nodes))) * 2.0 * math.pi / kernel.grid_size
    mass = kernel.cardinal_row(0.0)
    rows = []
    for p in range(1, steps + 1):
        mass = mass @ kernel.P
        rows.append({"t": p * kernel.tau, "decay": abs(kernel_expectation(kernel, phi, mass) - target)})
    return rows


class WeakErrorCurve(BaseModel):
    """Errors of a kernel expectation against a reference, with the fitted log-log slope."""

    taus: List[float] = Field(..., description="Step sizes")
    errors: List[float] = Field(..., description="Absolute errors")
    steps: List[int] = Field(..., description="Iteration counts per step size")
    order: int = Field(..., description="Expansion order N of the reference")
    slope: Optional[float] = Field(default=None, description="Fitted slope; None at the floor")
    at_floor: bool = Field(default=False, description="All errors below the numerical floor")


def _log_slope(taus: Sequence[float], errors: Sequence[float]):
    errors = np.asarray(errors, dtype=float)
    if np.all(errors <= ERROR_FLOOR):
        return None, True
    safe = np.maximum(errors, ERROR_FLOOR)
    return float(np.polyfit(np.log(taus), np.log(safe), 1)[0]), False


def _measure_expansion(model: SdeModel, N: int, cfg: SpectralConfig) -> MeasureExpansion:
    expansion = build_expansion(model, N, max_bandwidth=cfg.max_bandwidth)
    rho = stationary_density(expansion.L[0], cfg)
    return mu_hierarchy(expansion.L, rho, cfg, N)


def weak_error_curve(
    model: SdeModel,
    phi: TrigPoly,
    taus: Sequence[float],
    N: int,
    horizon: float = 30.0,
    M: int = DEFAULT_GRID_SIZE,
    Q: int = DEFAULT_QUAD_POINTS,
    measures: Optional[MeasureExpansion] = None,
    cfg: Optional[SpectralConfig] = None,
) -> WeakErrorCurve:
    """|E phi(X_p) - integral phi dmu^(N)(tau)| with p = ceil(T / tau), per step size."""
    cfg = cfg or SpectralConfig()
    me = measures or _measure_expansion(model, N, cfg)
    gap = spectral_gap(generator(model), cfg)
    if math.exp(-gap * horizon) > min(taus) ** (N + 1):
        logger.warning(
            f"Horizon {horizon} leaves a transient exp(-{gap:.3f} T) above tau^{N + 1}"
        )
    errors, steps = [], []
    for tau in taus:
        kernel = transition_matrix(model, tau, M, Q)
        p = int(math.ceil(horizon / tau))
        mass = iterate_law(kernel, p)
        reference = expectation_under(phi, modified_density(me, tau, N))
        errors.append(abs(kernel_expectation(kernel, phi, mass) - reference))
        steps.append(p)
    slope, at_floor = _log_slope(taus, errors)
    logger.info(f"Long-time weak error N={N}: slope {slope}")
    return WeakErrorCurve(
        taus=list(taus), errors=errors, steps=steps, order=N, slope=slope, at_floor=at_floor
    )


def finite_time_error_curve(
    model: SdeModel,
    phi: TrigPoly,
    taus: Sequence[float],
    N: int,
    horizon: float = 1.0,
    M: int = DEFAULT_GRID_SIZE,
    Q: int = DEFAULT_QUAD_POINTS,
    cfg: Optional[SpectralConfig] = None,
) -> WeakErrorCurve:
    """|E phi(X_p) - v^(N)(t_p, 0)| at t_p = p tau close to ``horizon``."""
    cfg = cfg or SpectralConfig()
    expansion = build_expansion(model, N, max_bandwidth=cfg.max_bandwidth)
    errors, steps = [], []
    for tau in taus:
        p = max(1, int(round(horizon / tau)))
        traj = hierarchy(expansion.L, phi, [p * tau], cfg)
        kernel = transition_matrix(model, tau, M, Q)
        expected = kernel_expectation(kernel, phi, iterate_law(kernel, p))
        errors.append(abs(expected - v_truncated(traj, tau, N, 0)(0.0)))
        steps.append(p)
    slope, at_floor = _log_slope(taus, errors)
    return WeakErrorCurve(
        taus=list(taus), errors=errors, steps=steps, order=N, slope=slope, at_floor=at_floor
    )
