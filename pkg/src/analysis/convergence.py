"""Log-log slope fits and the step-size sweeps behind the convergence studies."""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..algebra.diffop import DiffOp, apply
from ..algebra.trigpoly import TrigPoly
from ..expansion.models import OperatorExpansion
from ..expansion.operators import modified_generator
from ..simulation.kernel import (
    iterate_law,
    kernel_expectation,
    numerical_invariant,
    one_step_expectation,
    transition_matrix,
)
from ..spectral.kolmogorov import SpectralConfig, semigroup_taylor_error
from ..spectral.measures import (
    MeasureExpansion,
    density_distance,
    expectation_under,
    modified_density,
    residual_G,
)

logger = logging.getLogger(__name__)

NUMERICAL_FLOOR = 1e-11


class SlopeFit(BaseModel):
    """Least-squares slope of log(error) against log(tau)."""

    slope: Optional[float] = Field(default=None, description="Fitted slope; None at the floor")
    intercept: Optional[float] = Field(default=None, description="Fitted log-constant")
    at_floor: bool = Field(default=False, description="Every error below the numerical floor")
    points: int = Field(default=0, description="Number of points fitted")

    def at_least(self, lower: float) -> bool:
        return self.at_floor or (self.slope is not None and self.slope >= lower)

    def within(self, lower: float, upper: float) -> bool:
        return self.at_floor or (self.slope is not None and lower <= self.slope <= upper)

    def label(self) -> str:
        return "floor" if self.at_floor else f"{self.slope:.3f}"


def fit_slope(xs: Sequence[float], ys: Sequence[float], floor: float = NUMERICAL_FLOOR) -> SlopeFit:
    """Fit log y = s log x + c; all-floor data is flagged instead of fitted.

    Args:
        xs: Step sizes.
        ys: Errors.
        floor: Errors at or below this are treated as exact.

    Returns:
        SlopeFit: The fit or the floor flag.
    """
    x = np.asarray(xs, dtype=float)
    y = np.abs(np.asarray(ys, dtype=float))
    if np.all(y <= floor):
        return SlopeFit(at_floor=True, points=int(x.size))
    if x.size < 2:
        raise ValueError("a slope needs at least two points")
    slope, intercept = np.polyfit(np.log(x), np.log(np.maximum(y, floor)), 1)
    return SlopeFit(slope=float(slope), intercept=float(intercept), points=int(x.size))


class SweepResult(BaseModel):
    """Error table over step sizes and orders, with a slope per order."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = Field(..., description="Sweep identifier, also the CSV stem")
    table: pd.DataFrame = Field(..., description="Columns tau, error_N<n>")
    fits: Dict[int, SlopeFit] = Field(default_factory=dict, description="Slope per order")
    point_fits: Dict[int, List[SlopeFit]] = Field(
        default_factory=dict, description="Slope per order and test point"
    )


def _table(taus: Sequence[float], errors: Dict[int, List[float]], prefix: str = "error") -> pd.DataFrame:
    data = {"tau": list(taus)}
    for N in sorted(errors):
        data[f"{prefix}_N{N}"] = errors[N]
    return pd.DataFrame(data)


def _result(name: str, taus: Sequence[float], errors: Dict[int, List[float]]) -> SweepResult:
    fits = {N: fit_slope(taus, errs) for N, errs in errors.items()}
    for N, fit in fits.items():
        logger.info(f"{name}: N={N} slope {fit.label()}")
    return SweepResult(name=name, table=_table(taus, errors), fits=fits)


def sample_points(count: int) -> np.ndarray:
    """Off-node sample points x_i = 2 pi (i + 1/2) / count."""
    return 2.0 * math.pi * (np.arange(count) + 0.5) / count


def one_step_sweep(
    expansion: OperatorExpansion,
    phi: TrigPoly,
    taus: Sequence[float],
    orders: Sequence[int],
    points: int = 8,
    Q: int = 40,
    max_bandwidth: int = 256,
) -> SweepResult:
    """|E phi(X_1) - sum_{n<=N} tau^n A_n phi| at test points, per order N."""
    top = max(orders)
    if top > len(expansion.A) - 1:
        raise ValueError(f"order {top} needs A_{top}; expansion stops at A_{len(expansion.A) - 1}")
    xs = sample_points(points)
    terms = [apply(expansion.A[n], phi, max_bandwidth)(xs) for n in range(top + 1)]
    pointwise: Dict[int, List[np.ndarray]] = {N: [] for N in orders}
    for tau in taus:
        exact = one_step_expectation(expansion.model, phi, tau, xs, Q)
        for N in orders:
            approx = sum(tau**n * terms[n] for n in range(N + 1))
            pointwise[N].append(np.abs(exact - approx))
    errors = {N: [float(np.max(e)) for e in pointwise[N]] for N in orders}
    result = _result("one_step", taus, errors)
    result.point_fits = {
        N: [fit_slope(taus, [e[i] for e in pointwise[N]]) for i in range(points)] for N in orders
    }
    return result


def taylor_sweep(
    L: DiffOp,
    phi: TrigPoly,
    taus: Sequence[float],
    orders: Sequence[int],
    cfg: SpectralConfig,
) -> SweepResult:
    """sup |P_tau phi - sum_{n<=N} tau^n L^n phi / n!| per order N."""
    errors = {N: [semigroup_taylor_error(L, phi, tau, N, cfg) for tau in taus] for N in orders}
    return _result("taylor", taus, errors)


def invariant_sweep(
    expansion: OperatorExpansion,
    measures: MeasureExpansion,
    phi: TrigPoly,
    taus: Sequence[float],
    orders: Sequence[int],
    horizon: float = 30.0,
    M: int = 33,
    Q: int = 40,
) -> Tuple[SweepResult, SweepResult]:
    """Long-time kernel expectations and invariant densities against mu^(N)(tau).

    Returns:
        Tuple[SweepResult, SweepResult]: The expectation sweep
        |E phi(X_p) - integral phi dmu^(N)| and the density sweep
        sup |pi_tau - mu^(N)(tau)| over grid nodes.
    """
    expectation_errors: Dict[int, List[float]] = {N: [] for N in orders}
    density_errors: Dict[int, List[float]] = {N: [] for N in orders}
    for tau in taus:
        kernel = transition_matrix(expansion.model, tau, M, Q)
        p = int(math.ceil(horizon / tau))
        expected = kernel_expectation(kernel, phi, iterate_law(kernel, p))
        invariant = numerical_invariant(kernel)
        for N in orders:
            density = modified_density(measures, tau, N)
            expectation_errors[N].append(abs(expected - expectation_under(phi, density)))
            density_errors[N].append(density_distance(invariant.values, density))
    return (
        _result("long_time", taus, expectation_errors),
        _result("invariant_density", taus, density_errors),
    )


def residual_sweep(
    expansion: OperatorExpansion,
    measures: MeasureExpansion,
    taus: Sequence[float],
    orders: Sequence[int],
    max_bandwidth: int = 256,
) -> Tuple[SweepResult, Dict[int, List[float]]]:
    """sup |L^(N)* mu^(N)| per order, together with the integrals of G^(N)."""
    errors: Dict[int, List[float]] = {N: [] for N in orders}
    means: Dict[int, List[float]] = {N: [] for N in orders}
    for tau in taus:
        for N in orders:
            G = residual_G(
                modified_generator(expansion, tau, N),
                modified_density(measures, tau, N),
                max_bandwidth,
            )
            errors[N].append(G.sup_norm)
            means[N].append(G.mean)
    return _result("residual", taus, errors), means
