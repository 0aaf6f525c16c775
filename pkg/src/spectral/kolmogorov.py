"""Fourier-Galerkin solvers for the Kolmogorov equation and its adjoint."""

import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.integrate import simpson
from scipy.linalg import eigvals, expm, qr, solve_triangular

from ..algebra.diffop import DiffOp, adjoint, apply, matrix
from ..algebra.trigpoly import (
    DEFAULT_MAX_BANDWIDTH,
    GridFunction,
    TrigPoly,
    grid_nodes,
    inner,
    interpolate,
    sup_norm,
)
from ..exceptions import FitFailed, NotADensity, NotSolvable, SolveFailed
from ..expansion.models import SdeModel

logger = logging.getLogger(__name__)

DENSITY_FLOOR = -1e-8
SOLVABILITY_TOLERANCE = 1e-10
MIXING_SAMPLES = 32
DECAY_FLOOR = 1e-13


class SpectralConfig(BaseModel):
    """Galerkin truncation and solver tolerances."""

    bandwidth: int = Field(default=32, ge=8, description="Galerkin truncation K")
    solve_tol: float = Field(default=1e-10, gt=0, description="Linear-solve residual bound")
    time_integrator: Literal["matrix_exponential"] = Field(
        default="matrix_exponential", description="Semigroup propagation method"
    )
    max_bandwidth: int = Field(
        default=DEFAULT_MAX_BANDWIDTH, ge=1, description="Cap for coefficient products"
    )

    def doubled(self) -> "SpectralConfig":
        return self.model_copy(update={"bandwidth": 2 * self.bandwidth})


class HierarchyTrajectory(BaseModel):
    """Correctors v_n(t) of the modified flow, sampled at increasing times."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: List[float] = Field(..., description="Increasing sample times")
    v: List[List[TrigPoly]] = Field(..., description="v[n][i] = v_n(times[i])")
    phi: TrigPoly = Field(..., description="Initial condition of v_0")

    @field_validator("times")
    @classmethod
    def check_times(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("at least one time is required")
        if v[0] < 0 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("times must be increasing and start at t >= 0")
        return v

    @property
    def depth(self) -> int:
        return len(self.v) - 1


def _weights(K: int) -> np.ndarray:
    """Quadrature weights of the real basis: integral of e_j times a function's j-th coefficient."""
    w = np.full(2 * K + 1, math.pi)
    w[0] = 2.0 * math.pi
    return w


def _bordered_solve(system: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    Q, R = qr(system)
    return solve_triangular(R, Q.T @ rhs)


def stationary_density(L: DiffOp, cfg: SpectralConfig) -> TrigPoly:
    """Invariant density rho with L* rho = 0 and integral 1.

    The singular Galerkin system is bordered by a row pinning the constant
    coefficient to 1/(2 pi) and solved by QR.

    Raises:
        SolveFailed: If the residual exceeds ``cfg.solve_tol``.
        NotADensity: If rho dips below -1e-8 on a 4K-node grid.
    """
    K = cfg.bandwidth
    size = 2 * K + 1
    M = matrix(adjoint(L, cfg.max_bandwidth), K)
    system = np.zeros((size + 1, size + 1))
    system[:size, :size] = M
    system[0, size] = 1.0
    system[size, 0] = 1.0
    rhs = np.zeros(size + 1)
    rhs[size] = 1.0 / (2.0 * math.pi)
    rho = _bordered_solve(system, rhs)[:size]

    residual = float(np.max(np.abs(M @ rho)))
    if residual > cfg.solve_tol:
        raise SolveFailed("stationary density", residual, cfg.solve_tol)
    density = TrigPoly(rho)
    lowest = float(np.min(density(grid_nodes(4 * K))))
    if lowest < DENSITY_FLOOR:
        raise NotADensity(f"stationary density reaches {lowest:.3e} < {DENSITY_FLOOR}")
    logger.debug(f"Stationary density solved at K={K}, residual {residual:.2e}")
    return density


def solve_poisson_adjoint(
    L: DiffOp, g: TrigPoly, rho: TrigPoly, cfg: SpectralConfig
) -> TrigPoly:
    """Solve L* mu = g with the normalization integral(mu rho) = 0.

    Args:
        L: Generator whose adjoint is inverted.
        g: Right-hand side; must have (numerically) zero mean.
        rho: Invariant density used for the normalization row.
        cfg: Truncation and tolerance.

    Returns:
        TrigPoly: The solution mu at bandwidth K.

    Raises:
        NotSolvable: If the mean of g is not negligible.
        SolveFailed: If the residual exceeds the tolerance.
    """
    K = cfg.bandwidth
    size = 2 * K + 1
    scale = max(1.0, g.max_abs)
    if abs(2.0 * math.pi * g.mean) > SOLVABILITY_TOLERANCE * scale:
        raise NotSolvable(f"right-hand side has integral {2.0 * math.pi * g.mean:.3e}")
    rhs_coeffs = g.vector(K)
    rhs_coeffs[0] = 0.0

    M = matrix(adjoint(L, cfg.max_bandwidth), K)
    system = np.zeros((size + 1, size + 1))
    system[:size, :size] = M
    system[0, size] = 1.0
    system[size, :size] = _weights(K) * rho.vector(K)
    rhs = np.zeros(size + 1)
    rhs[:size] = rhs_coeffs
    mu = _bordered_solve(system, rhs)[:size]

    residual = float(np.max(np.abs(M @ mu - rhs_coeffs)))
    tolerance = cfg.solve_tol * scale
    if residual > tolerance:
        raise SolveFailed("adjoint Poisson problem", residual, tolerance)
    return TrigPoly(mu)


def average(psi: TrigPoly, rho: TrigPoly) -> float:
    """<psi> = integral of psi * rho."""
    return inner(psi, rho)


def propagate(L: DiffOp, phi: TrigPoly, t: float, cfg: SpectralConfig) -> TrigPoly:
    """P_t phi = exp(t L) phi on the Galerkin space."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if t == 0:
        return phi
    K = cfg.bandwidth
    return TrigPoly(expm(t * matrix(L, K)) @ phi.vector(K))


def semigroup_taylor_error(
    L: DiffOp, phi: TrigPoly, tau: float, N: int, cfg: SpectralConfig
) -> float:
    """sup | P_tau phi - sum_{n<=N} tau^n L^n phi / n! |."""
    taylor = phi
    term = phi
    for n in range(1, N + 1):
        term = apply(L, term, cfg.max_bandwidth) * (tau / n)
        taylor = taylor + term
    return sup_norm(propagate(L, phi, tau, cfg) - taylor)


class MixingEstimate(BaseModel):
    """Fitted exponential decay rate with the sampled decay table."""

    rate: float = Field(..., description="Fitted rate lambda")
    prefactor: float = Field(..., description="Fitted constant C in C exp(-lambda t)")
    times: List[float] = Field(..., description="Sample times")
    decay: List[float] = Field(..., description="sup |P_t phi - <phi>| at each time")
    fit_points: int = Field(..., description="Samples used in the tail fit")


def fit_exponential_rate(
    times: Sequence[float], values: Sequence[float], floor: float = DECAY_FLOOR
) -> Tuple[float, float, int]:
    """Log-linear fit over the tail half of the samples that stay above ``floor``.

    Samples after the first one at or below the floor are dropped, so a decay that
    reaches rounding level early in (0, T] is fitted on its resolved part.

    Returns:
        Tuple[float, float, int]: (rate, prefactor, points used).

    Raises:
        FitFailed: On fewer than three usable points or a non-monotone tail.
    """
    t = np.asarray(times, dtype=float)
    d = np.asarray(values, dtype=float)
    above = d > floor
    resolved = len(d) if above.all() else int(np.argmin(above))
    t, d = t[:resolved], d[:resolved]
    tail = slice(len(t) // 2, None)
    t, d = t[tail], d[tail]
    if t.size < 3:
        raise FitFailed(f"only {t.size} decay samples above {floor:.0e} in the fit window")
    rises = d[1:] > d[:-1] * (1.0 + 1e-6) + 1e-12
    if np.any(rises):
        raise FitFailed("decay is not monotone over the fit window; increase the horizon")
    slope, intercept = np.polyfit(t, np.log(d), 1)
    return float(-slope), float(math.exp(intercept)), int(t.size)


def decay_samples(
    L: DiffOp,
    phi: TrigPoly,
    rho: TrigPoly,
    T: float,
    cfg: SpectralConfig,
    samples: int = MIXING_SAMPLES,
) -> Tuple[List[float], List[float]]:
    """sup |P_t phi - <phi>| at ``samples`` equally spaced times in (0, T]."""
    if T <= 0:
        raise ValueError(f"horizon must be positive, got {T}")
    K = cfg.bandwidth
    dt = T / samples
    step = expm(dt * matrix(L, K))
    target = average(phi, rho)
    state = phi.vector(K)
    times, decay = [], []
    for i in range(1, samples + 1):
        state = step @ state
        times.append(i * dt)
        decay.append(sup_norm(TrigPoly(state) - target, nodes=max(64, 4 * K)))
    return times, decay


def mixing_rate(
    L: DiffOp,
    phi: TrigPoly,
    rho: TrigPoly,
    T: float,
    cfg: SpectralConfig,
    samples: int = MIXING_SAMPLES,
) -> MixingEstimate:
    """Fit sup |P_t phi - <phi>| ~ C exp(-lambda t) on (0, T].

    Raises:
        FitFailed: If the decay cannot be fitted on the tail half.
    """
    times, decay = decay_samples(L, phi, rho, T, cfg, samples)
    rate, prefactor, used = fit_exponential_rate(times, decay)
    logger.info(f"Mixing rate {rate:.4f} fitted on {used} samples over (0, {T}]")
    return MixingEstimate(rate=rate, prefactor=prefactor, times=times, decay=decay, fit_points=used)


def spectral_gap(L: DiffOp, cfg: SpectralConfig) -> float:
    """Minus the second-largest real part among the eigenvalues of matrix(L)."""
    real = np.sort(eigvals(matrix(L, cfg.bandwidth)).real)[::-1]
    return float(-real[1])


def gibbs_density(model: SdeModel, nodes: int = 512) -> Optional[GridFunction]:
    """Closed-form density exp(int_0^x f/a) / a for reversible models.

    Returns None when f/a has a non-zero mean, i.e. the model has no potential.
    """
    x = grid_nodes(nodes)
    ratio = model.f(x) / model.a(x)
    h = interpolate(GridFunction(ratio), nodes // 2 - 1)
    if abs(h.mean) > 1e-12 * max(1.0, h.max_abs):
        return None
    K = h.bandwidth
    k = np.arange(1, K + 1, dtype=float)
    primitive = np.zeros(2 * K + 1)
    primitive[1::2] = -h.coeffs[2::2] / k
    primitive[2::2] = h.coeffs[1::2] / k
    H = TrigPoly(primitive)
    values = np.exp(H(x) - H(0.0)) / model.a(x)
    values /= 2.0 * math.pi * np.mean(values)
    return GridFunction(values)


def hierarchy(
    Ls: Sequence[DiffOp], phi: TrigPoly, times: Sequence[float], cfg: SpectralConfig
) -> HierarchyTrajectory:
    """Solve d/dt v_n = L_0 v_n + sum_{l=1..n} L_l v_(n-l), v_0(0) = phi, v_n(0) = 0.

    The block lower-triangular generator is exponentiated once per requested time.
    """
    K = cfg.bandwidth
    size = 2 * K + 1
    depth = len(Ls)
    blocks = [matrix(op, K) for op in Ls]
    B = np.zeros((depth * size, depth * size))
    for i in range(depth):
        for j in range(i + 1):
            B[i * size:(i + 1) * size, j * size:(j + 1) * size] = blocks[i - j]
    start = np.zeros(depth * size)
    start[:size] = phi.vector(K)

    v: List[List[TrigPoly]] = [[] for _ in range(depth)]
    for t in times:
        state = start if t == 0 else expm(t * B) @ start
        for n in range(depth):
            v[n].append(TrigPoly(state[n * size:(n + 1) * size]))
    logger.debug(f"Hierarchy of depth {depth - 1} propagated to {len(times)} times")
    return HierarchyTrajectory(times=list(map(float, times)), v=v, phi=phi)


def v_truncated(traj: HierarchyTrajectory, tau: float, N: int, t_index: int) -> TrigPoly:
    """v^(N)(t) = sum_{n=0..N} tau^n v_n(t)."""
    if N > traj.depth:
        raise ValueError(f"order {N} exceeds trajectory depth {traj.depth}")
    result = traj.v[0][t_index]
    for n in range(1, N + 1):
        result = result + (tau**n) * traj.v[n][t_index]
    return result


def modified_residual(
    LN: Optional[DiffOp],
    traj: HierarchyTrajectory,
    Ls: Sequence[DiffOp],
    tau: float,
    N: int,
    method: Literal["explicit", "centered"] = "explicit",
    max_bandwidth: int = DEFAULT_MAX_BANDWIDTH,
    generator_order: Optional[int] = None,
) -> float:
    """max over sampled times of sup | d/dt v^(N) - L^(M) v^(N) |, M = ``generator_order``.

    ``explicit`` evaluates -sum tau^(l1+l2) L_l1 v_l2 over l1 <= M, l2 <= N,
    l1 + l2 > N, with M = N unless ``generator_order`` asks for a longer
    generator; ``centered`` differences v^(N) in time and applies ``LN``
    at interior sample times.
    """
    if N > len(traj.v) - 1:
        raise ValueError(f"order {N} needs v_{N}; trajectory stops at v_{len(traj.v) - 1}")
    if method == "centered":
        if LN is None or len(traj.times) < 3:
            raise ValueError("centered residual needs LN and at least three sample times")
        worst = 0.0
        for i in range(1, len(traj.times) - 1):
            dt = traj.times[i + 1] - traj.times[i - 1]
            dv = (v_truncated(traj, tau, N, i + 1) - v_truncated(traj, tau, N, i - 1)) / dt
            worst = max(worst, sup_norm(dv - apply(LN, v_truncated(traj, tau, N, i), max_bandwidth)))
        return worst

    depth = N if generator_order is None else generator_order
    if depth > len(Ls) - 1:
        raise ValueError(f"generator order {depth} needs L_{depth}; got {len(Ls)} operators")
    worst = 0.0
    for i in range(len(traj.times)):
        terms = [
            (-(tau ** (l1 + l2)), l1, l2)
            for l1 in range(depth + 1)
            for l2 in range(N + 1)
            if l1 + l2 > N
        ]
        residual = TrigPoly.zero()
        for weight, l1, l2 in terms:
            residual = residual + weight * apply(Ls[l1], traj.v[l2][i], max_bandwidth)
        worst = max(worst, sup_norm(residual))
    return worst


def duhamel_corrector(
    Ls: Sequence[DiffOp],
    traj: HierarchyTrajectory,
    n: int,
    t_index: int,
    cfg: SpectralConfig,
    substeps: int = 200,
) -> TrigPoly:
    """v_n(t) re-solved as integral_0^t P_(t-s) F_n(s) ds by the composite Simpson rule.

    F_n(s) = sum_{l=1..n} L_l v_(n-l)(s); the lower correctors are advanced with
    the same block generator as ``hierarchy``.
    """
    if substeps % 2:
        raise ValueError("Simpson rule needs an even number of substeps")
    if n < 1:
        return traj.v[0][t_index] if n == 0 else TrigPoly.zero()
    t = traj.times[t_index]
    if t == 0:
        return TrigPoly.zero()
    K = cfg.bandwidth
    size = 2 * K + 1
    blocks = [matrix(op, K) for op in Ls[: n + 1]]
    B = np.zeros((n * size, n * size))
    for i in range(n):
        for j in range(i + 1):
            B[i * size:(i + 1) * size, j * size:(j + 1) * size] = blocks[i - j]
    h = t / substeps
    lower_step = expm(h * B)
    outer_step = expm(h * blocks[0])
    state = np.zeros(n * size)
    state[:size] = traj.phi.vector(K)

    forcing = np.empty((substeps + 1, size))
    for j in range(substeps + 1):
        forcing[j] = sum(blocks[l] @ state[(n - l) * size:(n - l + 1) * size] for l in range(1, n + 1))
        state = lower_step @ state

    # integrand[j] = P_(t - s_j) F_n(s_j)
    integrand = np.empty_like(forcing)
    propagator = np.eye(size)
    for j in range(substeps, -1, -1):
        integrand[j] = propagator @ forcing[j]
        propagator = outer_step @ propagator
    return TrigPoly(simpson(integrand, dx=h, axis=0))
