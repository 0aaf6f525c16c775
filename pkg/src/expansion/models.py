"""Data models for SDE definitions and operator expansions."""

import math
from functools import cached_property
from typing import Any, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import minimize_scalar

from ..algebra.diffop import DiffOp
from ..algebra.trigpoly import TrigPoly, grid_nodes, multiply

ELLIPTICITY_GRID = 512
ELLIPTICITY_FLOOR = 1e-8


def _as_trigpoly(value: Any) -> Any:
    """Accept harmonic lists [[k, a_k, b_k], ...] and bare numbers as coefficients."""
    if isinstance(value, TrigPoly):
        return value
    if isinstance(value, (int, float)):
        return TrigPoly.constant(float(value))
    if isinstance(value, (list, tuple)):
        return TrigPoly.from_harmonics(value)
    return value


class SdeModel(BaseModel):
    """Scalar SDE dX = f(X) dt + sigma(X) dW on the circle."""

    model_config = ConfigDict(arbitrary_types_allowed=True, ignored_types=(cached_property,))

    f: TrigPoly = Field(..., description="Drift coefficient")
    sigma: TrigPoly = Field(..., description="Diffusion amplitude")
    name: str = Field(default="custom", description="Label used in reports")
    elliptic_check: bool = Field(
        default=True,
        description="Reject models whose diffusion vanishes somewhere (test-only bypass)",
    )

    @field_validator("f", "sigma", mode="before")
    @classmethod
    def coerce_coefficients(cls, v: Any) -> Any:
        return _as_trigpoly(v)

    @model_validator(mode="after")
    def check_ellipticity(self) -> "SdeModel":
        if self.elliptic_check and self.ellipticity_min <= ELLIPTICITY_FLOOR:
            raise ValueError(
                f"diffusion is not elliptic: min a(x) = {self.ellipticity_min:.3e} <= {ELLIPTICITY_FLOOR}"
            )
        return self

    @cached_property
    def a(self) -> TrigPoly:
        """Diffusion coefficient a = sigma^2 / 2."""
        return multiply(self.sigma, self.sigma) / 2.0

    @cached_property
    def ellipticity_min(self) -> float:
        """Minimum of a(x): the fine-grid minimum refined by a bounded scalar search.

        A sign change of sigma between neighbouring nodes means a vanishes in between.
        """
        size = max(ELLIPTICITY_GRID, 16 * self.a.bandwidth + 1)
        nodes = grid_nodes(size)
        s = np.asarray(self.sigma(nodes))
        if np.any(s * np.roll(s, -1) < 0):
            return 0.0
        values = np.asarray(self.a(nodes))
        i = int(np.argmin(values))
        h = 2.0 * math.pi / size
        refined = minimize_scalar(
            self.a, bounds=(nodes[i] - h, nodes[i] + h), method="bounded", options={"xatol": 1e-12}
        )
        return float(min(values[i], refined.fun))

    @cached_property
    def sigma_max(self) -> float:
        size = max(ELLIPTICITY_GRID, 16 * self.sigma.bandwidth + 1)
        return float(np.max(np.abs(self.sigma(grid_nodes(size)))))

    @property
    def is_constant(self) -> bool:
        return self.f.trimmed().bandwidth == 0 and self.sigma.trimmed().bandwidth == 0

    @classmethod
    def langevin(cls) -> "SdeModel":
        """Overdamped Langevin dynamics f = -sin, sigma = sqrt(2); invariant law ~ e^cos."""
        return cls(f=TrigPoly.sin(1, -1.0), sigma=TrigPoly.constant(math.sqrt(2.0)), name="langevin")

    @classmethod
    def brownian(cls) -> "SdeModel":
        """Driftless motion with a = 1, generator d^2."""
        return cls(f=TrigPoly.zero(), sigma=TrigPoly.constant(math.sqrt(2.0)), name="brownian")

    @classmethod
    def constant(cls, drift: float, diffusion: float) -> "SdeModel":
        return cls(f=TrigPoly.constant(drift), sigma=TrigPoly.constant(diffusion), name="constant")


class OperatorExpansion(BaseModel):
    """One-step operators A_0..A_{N+1} and modified-generator terms L_0..L_N."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: SdeModel = Field(..., description="Model the operators were built for")
    order: int = Field(..., ge=0, description="Expansion order N")
    A: List[DiffOp] = Field(..., description="A_0..A_{N+1}")
    L: List[DiffOp] = Field(..., description="L_0..L_N")

    @model_validator(mode="after")
    def check_structure(self) -> "OperatorExpansion":
        if len(self.A) != self.order + 2 or len(self.L) != self.order + 1:
            raise ValueError(
                f"order {self.order} needs {self.order + 2} A and {self.order + 1} L operators, "
                f"got {len(self.A)} and {len(self.L)}"
            )
        for n, op in enumerate(self.A):
            if op.max_order > 2 * n:
                raise ValueError(f"A_{n} has order {op.max_order} > {2 * n}")
        for n, op in enumerate(self.L):
            if op.max_order > 2 * n + 2:
                raise ValueError(f"L_{n} has order {op.max_order} > {2 * n + 2}")
        return self
