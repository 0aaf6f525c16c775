"""Modified invariant-measure expansion rho + sum tau^n mu_n."""

import logging
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..algebra.diffop import DiffOp, adjoint, apply
from ..algebra.trigpoly import (
    DEFAULT_MAX_BANDWIDTH,
    TrigPoly,
    grid_nodes,
    inner,
    integrate,
    sup_norm,
)
from ..exceptions import NotSolvable
from .kolmogorov import HierarchyTrajectory, SpectralConfig, solve_poisson_adjoint, stationary_density

logger = logging.getLogger(__name__)

RHS_MEAN_TOLERANCE = 1e-9
DEFAULT_MEASURE_ORDER = 3


class MeasureExpansion(BaseModel):
    """rho and the correctors mu_1..mu_N, each with zero integral."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    rho: TrigPoly = Field(..., description="Invariant density mu_0")
    mu: List[TrigPoly] = Field(default_factory=list, description="Correctors mu_1..mu_N")
    order: int = Field(..., ge=0, description="Expansion order N")
    metadata: Dict[str, List[float]] = Field(
        default_factory=dict, description="Normalization states recorded during the solve"
    )

    @model_validator(mode="after")
    def check_length(self) -> "MeasureExpansion":
        if len(self.mu) != self.order:
            raise ValueError(f"order {self.order} needs {self.order} correctors, got {len(self.mu)}")
        return self

    def corrector(self, n: int) -> TrigPoly:
        """mu_n with mu_0 = rho."""
        return self.rho if n == 0 else self.mu[n - 1]


def mu_hierarchy(
    Ls: Sequence[DiffOp],
    rho: TrigPoly,
    cfg: SpectralConfig,
    order: Optional[int] = None,
) -> MeasureExpansion:
    """Solve L_0* mu_n = -sum_{l=1..n} L_l* mu_(n-l) for n = 1..N.

    Each solution is first pinned by <mu_n, rho> = 0 and then shifted by a
    multiple of rho so that its integral vanishes.

    Args:
        Ls: L_0..L_M with M >= N.
        rho: Invariant density of L_0.
        cfg: Truncation and tolerances.
        order: N; defaults to M.

    Raises:
        NotSolvable: If a right-hand side has a non-negligible integral.
    """
    N = len(Ls) - 1 if order is None else order
    if N > len(Ls) - 1:
        raise ValueError(f"order {N} needs L_0..L_{N}, got {len(Ls)} operators")
    adjoints = [adjoint(op, cfg.max_bandwidth) for op in Ls[: N + 1]]
    rho_mass = integrate(rho)
    mu: List[TrigPoly] = []
    rhs_means: List[float] = []
    pinned_products: List[float] = []
    pinned_means: List[float] = []

    for n in range(1, N + 1):
        g = TrigPoly.zero()
        for l in range(1, n + 1):
            previous = rho if n == l else mu[n - l - 1]
            g = g - apply(adjoints[l], previous, cfg.max_bandwidth)
        mean = integrate(g)
        rhs_means.append(mean)
        if abs(mean) > RHS_MEAN_TOLERANCE * max(1.0, g.max_abs):
            raise NotSolvable(f"G_{n} has integral {mean:.3e}; check the L_n construction")
        g = g - g.mean
        pinned = solve_poisson_adjoint(Ls[0], g, rho, cfg)
        pinned_products.append(inner(pinned, rho))
        pinned_means.append(integrate(pinned))
        mu.append(pinned - (integrate(pinned) / rho_mass) * rho)
        logger.debug(f"mu_{n} solved: pinned integral {pinned_means[-1]:.3e}")

    logger.info(f"✅ Measure expansion of order {N} built at K={cfg.bandwidth}")
    return MeasureExpansion(
        rho=rho,
        mu=mu,
        order=N,
        metadata={
            "rhs_integrals": rhs_means,
            "pinned_rho_products": pinned_products,
            "pinned_integrals": pinned_means,
            "shifted_integrals": [integrate(m) for m in mu],
        },
    )


def modified_density(me: MeasureExpansion, tau: float, N: int) -> TrigPoly:
    """mu^(N)(tau) = rho + sum_{n=1..N} tau^n mu_n."""
    if N > me.order:
        raise ValueError(f"order {N} exceeds expansion order {me.order}")
    density = me.rho
    for n in range(1, N + 1):
        density = density + (tau**n) * me.mu[n - 1]
    return density


class ResidualG(NamedTuple):
    G: TrigPoly
    sup_norm: float
    mean: float


def residual_G(LN: DiffOp, muN: TrigPoly, max_bandwidth: int = DEFAULT_MAX_BANDWIDTH) -> ResidualG:
    """G = L^(N)* mu^(N), with its sup norm and integral."""
    G = apply(adjoint(LN, max_bandwidth), muN, max_bandwidth)
    nodes = max(64, 4 * G.bandwidth)
    return ResidualG(G=G, sup_norm=sup_norm(G, nodes=nodes), mean=integrate(G))


def expectation_under(phi: TrigPoly, density: TrigPoly) -> float:
    """integral of phi * density."""
    return inner(phi, density)


def tail_magnitude(p: TrigPoly, start: int) -> float:
    """Largest coefficient among harmonics >= start."""
    if start > p.bandwidth:
        return 0.0
    return float(np.max(np.abs(p.coeffs[2 * start - 1:]))) if start > 0 else p.max_abs


def resolution_check(Ls: Sequence[DiffOp], cfg: SpectralConfig, order: Optional[int] = None) -> float:
    """Largest coefficient change of rho and mu_n when K is doubled."""
    coarse_rho = stationary_density(Ls[0], cfg)
    coarse = mu_hierarchy(Ls, coarse_rho, cfg, order)
    fine_cfg = cfg.doubled()
    fine_rho = stationary_density(Ls[0], fine_cfg)
    fine = mu_hierarchy(Ls, fine_rho, fine_cfg, order)
    change = max(
        coarse.corrector(n).distance(fine.corrector(n)) for n in range(coarse.order + 1)
    )
    logger.info(f"Resolution check K={cfg.bandwidth} -> {fine_cfg.bandwidth}: change {change:.2e}")
    return change


def conserved_quantities(traj: HierarchyTrajectory, me: MeasureExpansion) -> np.ndarray:
    """c_n(t) = sum_{m=0..n} integral v_(n-m)(t) mu_m, shape (orders, times)."""
    orders = min(traj.depth, me.order) + 1
    c = np.zeros((orders, len(traj.times)))
    for n in range(orders):
        for i in range(len(traj.times)):
            c[n, i] = sum(inner(traj.v[n - m][i], me.corrector(m)) for m in range(n + 1))
    return c


def corrector_decay(traj: HierarchyTrajectory, me: MeasureExpansion) -> np.ndarray:
    """sup | v_n(t) - integral(phi mu_n) |, the distance of each corrector to its limit."""
    orders = min(traj.depth, me.order) + 1
    decay = np.zeros((orders, len(traj.times)))
    for n in range(orders):
        limit = inner(traj.phi, me.corrector(n))
        for i in range(len(traj.times)):
            decay[n, i] = sup_norm(traj.v[n][i] - limit)
    return decay


def density_distance(grid_density: np.ndarray, density: TrigPoly) -> float:
    """sup over grid nodes of |grid density - density|."""
    x = grid_nodes(len(grid_density))
    return float(np.max(np.abs(np.asarray(grid_density) - density(x))))
