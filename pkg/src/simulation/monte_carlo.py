"""Seeded Monte Carlo simulation of the Euler scheme on the circle."""

import logging
import math
from typing import Callable, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..algebra.trigpoly import TrigPoly
from ..expansion.models import SdeModel

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
BATCHES = 32
# spawn key reserved for the single long path of ergodic averages
ERGODIC_STREAM = 2**32


def step_generator(seed: int, step: int) -> np.random.Generator:
    """Counter-based stream for one time step; path j uses the j-th draw."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(step,))))


class McConfig(BaseModel):
    """Parameters of a Monte Carlo run."""

    model: SdeModel = Field(..., description="SDE to simulate")
    tau: float = Field(..., gt=0, description="Step size")
    steps: int = Field(..., ge=0, description="Number of Euler steps p")
    paths: int = Field(default=1, ge=1, description="Number of independent paths")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Root seed")
    burn_in: int = Field(default=0, ge=0, description="Discarded steps for ergodic averages")
    x0: float = Field(default=0.0, description="Start point")
    path_offset: int = Field(default=0, ge=0, description="Index of the first simulated path")


class WeakEstimate(BaseModel):
    """Sample mean of phi(X_p) with its standard error."""

    mean: float = Field(..., description="Estimate of E phi(X_p)")
    std_error: Optional[float] = Field(..., ge=0, description="Standard error; None for one sample")
    paths: int = Field(..., ge=1, description="Number of samples (paths or batches)")
    variance: Optional[float] = Field(default=None, ge=0, description="Sample variance")

    @model_validator(mode="after")
    def check_consistency(self) -> "WeakEstimate":
        if self.paths == 1 and self.std_error is not None:
            raise ValueError("a single sample has no standard error")
        return self

    def contains(self, value: float, k: float = 3.0) -> bool:
        """True if value lies within k standard errors (exact match when std_error is 0 or None)."""
        if not self.std_error:
            return abs(self.mean - value) <= 1e-12 * max(1.0, abs(value))
        return abs(self.mean - value) <= k * self.std_error

    def pool(self, other: "WeakEstimate") -> "WeakEstimate":
        """Combine with an estimate from a disjoint set of paths."""
        n1, n2 = self.paths, other.paths
        n = n1 + n2
        mean = (n1 * self.mean + n2 * other.mean) / n
        squares = sum(
            (part.paths - 1) * (part.variance or 0.0) + part.paths * part.mean**2
            for part in (self, other)
        )
        variance = max(0.0, (squares - n * mean**2) / (n - 1))
        return WeakEstimate(mean=mean, std_error=math.sqrt(variance / n), paths=n, variance=variance)


def euler_step(
    model: SdeModel,
    x: Union[float, np.ndarray],
    tau: float,
    xi: Union[float, np.ndarray],
) -> Union[float, np.ndarray]:
    """x + tau f(x) + sigma(x) sqrt(tau) xi, reduced to [0, 2 pi)."""
    moved = x + tau * model.f(x) + model.sigma(x) * math.sqrt(tau) * xi
    return np.mod(moved, TWO_PI)


def _estimate(values: np.ndarray) -> WeakEstimate:
    n = int(values.size)
    mean = float(np.mean(values))
    if n == 1:
        return WeakEstimate(mean=mean, std_error=None, paths=1)
    variance = float(np.var(values, ddof=1))
    return WeakEstimate(mean=mean, std_error=math.sqrt(variance / n), paths=n, variance=variance)


def simulate_paths(cfg: McConfig) -> np.ndarray:
    """Endpoints X_p of paths path_offset .. path_offset + paths - 1."""
    x = np.full(cfg.paths, cfg.x0 % TWO_PI)
    stop = cfg.path_offset + cfg.paths
    for step in range(cfg.steps):
        xi = step_generator(cfg.seed, step).standard_normal(stop)[cfg.path_offset:]
        x = euler_step(cfg.model, x, cfg.tau, xi)
    return x


def weak_estimate(cfg: McConfig, phi: TrigPoly) -> WeakEstimate:
    """Mean and standard error of phi(X_p) over independent paths."""
    estimate = _estimate(np.asarray(phi(simulate_paths(cfg)), dtype=float))
    logger.debug(f"Weak estimate over {cfg.paths} paths: {estimate.mean:.6f}")
    return estimate


def _scalar(p: TrigPoly) -> Callable[[float], float]:
    """Fast scalar evaluator for the sequential single-path loop."""
    c0 = float(p.coeffs[0])
    harmonics = [
        (k, float(p.coeffs[2 * k - 1]), float(p.coeffs[2 * k])) for k in range(1, p.bandwidth + 1)
    ]

    def value(x: float) -> float:
        total = c0
        for k, a, b in harmonics:
            total += a * math.cos(k * x) + b * math.sin(k * x)
        return total

    return value


def ergodic_average(cfg: McConfig, phi: TrigPoly) -> WeakEstimate:
    """Time average of phi(X_n) over n > burn_in along one long path.

    The standard error comes from 32 batch means.
    """
    if cfg.burn_in >= cfg.steps:
        raise ValueError(f"burn-in {cfg.burn_in} must be below the step count {cfg.steps}")
    f, sigma, observable = _scalar(cfg.model.f), _scalar(cfg.model.sigma), _scalar(phi)
    noise = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(cfg.seed, spawn_key=(ERGODIC_STREAM,)))
    ).standard_normal(cfg.steps)
    root_tau = math.sqrt(cfg.tau)
    x = cfg.x0 % TWO_PI
    samples = np.empty(cfg.steps - cfg.burn_in)
    for n in range(cfg.steps):
        x = (x + cfg.tau * f(x) + sigma(x) * root_tau * noise[n]) % TWO_PI
        if n >= cfg.burn_in:
            samples[n - cfg.burn_in] = observable(x)

    mean = float(np.mean(samples))
    size = samples.size // BATCHES
    if size == 0:
        logger.warning(f"Only {samples.size} samples; batch means need {BATCHES}")
        return WeakEstimate(mean=mean, std_error=None, paths=1)
    batch_means = samples[: size * BATCHES].reshape(BATCHES, size).mean(axis=1)
    std_error = float(np.std(batch_means, ddof=1) / math.sqrt(BATCHES))
    logger.debug(f"Ergodic average {mean:.6f} +/- {std_error:.2e}")
    return WeakEstimate(mean=mean, std_error=std_error, paths=BATCHES)
