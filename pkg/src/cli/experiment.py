"""Experiment configuration, overrides and the JSON report."""

import hashlib
import json
import logging
import platform
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
import pydantic
import scipy
from pydantic import BaseModel, ConfigDict, Field, ValidationError, computed_field, field_validator, model_validator

from .. import __version__
from ..algebra.trigpoly import TrigPoly
from ..config.settings import Settings
from ..expansion.models import SdeModel

logger = logging.getLogger(__name__)

LANGEVIN_DRIFT = [[1, 0.0, -1.0]]
LANGEVIN_SIGMA = [[0, 2.0**0.5, 0.0]]


class ConfigurationError(click.ClickException):
    """Invalid experiment configuration; exits with code 2."""

    exit_code = 2


def _positive(values: List[float]) -> List[float]:
    if not values or any(v <= 0 for v in values):
        raise ValueError(f"step sizes must be positive and non-empty, got {values}")
    return values


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSpec(_Strict):
    """SDE coefficients as [k, a_k, b_k] harmonic lists."""

    name: str = Field(default="custom", description="Label used in reports")
    f: List[List[float]] = Field(..., description="Drift harmonics")
    sigma: List[List[float]] = Field(..., description="Diffusion amplitude harmonics")

    @model_validator(mode="after")
    def check_model(self) -> "ModelSpec":
        self.build()
        return self

    def build(self) -> SdeModel:
        return SdeModel(f=self.f, sigma=self.sigma, name=self.name)


class ResolutionSpec(_Strict):
    K: int = Field(..., ge=8, description="Galerkin truncation")
    M: int = Field(default=33, ge=3, description="Transition-kernel grid size")
    Q: int = Field(..., ge=20, description="Gauss-Hermite nodes")
    K_max: int = Field(..., ge=1, description="Bandwidth cap for coefficient products")


class Tolerances(_Strict):
    solve_tol: float = Field(..., gt=0, description="Linear-solve residual bound")
    inverse_relation: float = Field(default=1e-8, gt=0, description="A_n reconstruction residual")
    annihilation: float = Field(default=1e-10, gt=0, description="max |L_n 1|")
    closed_form: float = Field(default=1e-10, gt=0, description="A_n against its Gaussian-moment form")
    constant_model: float = Field(default=1e-10, gt=0, description="max |L_n| for constant coefficients")
    density: float = Field(default=1e-8, gt=0, description="rho against the closed-form density")
    kernel_exactness: float = Field(default=1e-10, gt=0, description="Kernel invariant vs rho, constant coefficients")
    residual_mean: float = Field(default=1e-9, gt=0, description="Integral of G^(N)")
    resolution: float = Field(default=1e-8, gt=0, description="Change of rho and mu_n when K doubles")
    slope_margin: float = Field(default=0.75, description="Lower slope bound is N + margin")
    slope_upper: float = Field(default=1.6, description="Upper one-step slope bound is N + upper")
    rate_stability: float = Field(default=0.1, gt=0, description="Relative change of lambda on a doubled window")
    rate_agreement: float = Field(default=0.2, gt=0, description="Relative gap between discrete and continuous rates")
    mc_sigmas: float = Field(default=3.0, gt=0, description="Standard errors allowed for Monte Carlo checks")


class ConvergeSpec(_Strict):
    one_step_tau: List[float] = Field(default=[0.1, 0.05, 0.025, 0.0125], description="One-step and Taylor step sizes")
    one_step_orders: List[int] = Field(default=[1, 2, 3], description="Orders of the one-step sweep")
    taylor_orders: List[int] = Field(default=[2, 3], description="Orders of the semigroup Taylor sweep")
    points: int = Field(default=8, ge=1, description="Test points of the one-step sweep")

    @field_validator("one_step_tau")
    @classmethod
    def check_tau(cls, v: List[float]) -> List[float]:
        return _positive(v)


class McSpec(_Strict):
    one_step_tau: float = Field(default=0.1, gt=0, description="Step size of the one-step check")
    tau: float = Field(default=0.1, gt=0, description="Step size of the p-step check")
    steps: int = Field(default=200, ge=1, description="p for the p-step check")
    paths: int = Field(default=100_000, ge=1, description="Independent paths")
    x0: float = Field(default=1.0, description="Start point")
    ergodic_tau: float = Field(default=0.05, gt=0, description="Step size of the ergodic average")
    ergodic_steps: int = Field(default=200_000, ge=1, description="Length of the ergodic path")
    burn_in: int = Field(default=1000, ge=0, description="Discarded ergodic steps")


class MixingSpec(_Strict):
    horizon: float = Field(default=10.0, gt=0, description="Fit window (0, T] of the continuous decay")
    tau: float = Field(default=0.05, gt=0, description="Step size of the discrete kernel")
    samples: int = Field(default=32, ge=6, description="Decay samples in (0, T]")


class ExperimentConfig(_Strict):
    """Validated experiment description shared by every command."""

    model: ModelSpec = Field(
        default_factory=lambda: ModelSpec(name="langevin", f=LANGEVIN_DRIFT, sigma=LANGEVIN_SIGMA),
        description="SDE coefficients",
    )
    observable: List[List[float]] = Field(default=[[1, 1.0, 0.0]], description="phi as harmonics")
    order: int = Field(..., ge=0, description="Expansion order N (also accepted as key N)")
    orders: List[int] = Field(default=[0, 1, 2], description="Orders of the measure sweeps")
    tau: List[float] = Field(default=[0.2, 0.1, 0.05, 0.025], description="Step sizes of the measure sweeps")
    density_tau: float = Field(default=0.1, gt=0, description="Step size of the exported densities")
    horizon: float = Field(default=30.0, gt=0, description="Minimum long-time horizon T")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Monte Carlo root seed")
    output_dir: Optional[str] = Field(default=None, description="Output directory")
    resolution: ResolutionSpec
    tolerances: Tolerances
    converge: ConvergeSpec = Field(default_factory=ConvergeSpec)
    mc: McSpec = Field(default_factory=McSpec)
    mixing: MixingSpec = Field(default_factory=MixingSpec)

    @field_validator("tau")
    @classmethod
    def check_tau(cls, v: List[float]) -> List[float]:
        return _positive(v)

    @field_validator("observable")
    @classmethod
    def check_observable(cls, v: List[List[float]]) -> List[List[float]]:
        TrigPoly.from_harmonics(v)
        return v

    @field_validator("orders")
    @classmethod
    def check_orders(cls, v: List[int]) -> List[int]:
        if not v or any(n < 0 for n in v):
            raise ValueError(f"orders must be non-negative and non-empty, got {v}")
        return sorted(set(v))

    @property
    def phi(self) -> TrigPoly:
        return TrigPoly.from_harmonics(self.observable)

    def sde(self) -> SdeModel:
        return self.model.build()

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json", exclude={"output_dir"}), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _defaults(settings: Settings) -> Dict[str, Any]:
    return {
        "order": settings.default_expansion_order,
        "resolution": {"K": settings.spectral_bandwidth, "Q": settings.quad_points, "K_max": settings.max_bandwidth},
        "tolerances": {"solve_tol": settings.solve_tol},
    }


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if key == "model":
            merged[key] = value
        elif isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def read_config_file(path: Path) -> Dict[str, Any]:
    """Parse a TOML or JSON experiment file."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigurationError(f"cannot parse config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must hold a table at the top level")
    return data


def apply_override(data: Dict[str, Any], override: str) -> Dict[str, Any]:
    """Set a dotted key from ``key=value``; the value is parsed as JSON when possible.

    Example:
        ``resolution.K=48`` or ``tau=[0.1,0.05]``.
    """
    key, sep, raw = override.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError(f"override must look like key=value, got {override!r}")
    try:
        value: Any = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.strip().split(".")
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigurationError(f"override {key!r}: {part!r} is not a table")
        node = child
    node[parts[-1]] = value
    return data


def load_experiment(
    path: Optional[Path],
    overrides: Sequence[str],
    settings: Settings,
    output_dir: Optional[str] = None,
) -> ExperimentConfig:
    """Merge defaults, the config file and overrides into a validated config.

    Raises:
        ConfigurationError: On unreadable files, malformed overrides or schema violations.
    """
    data = _defaults(settings)
    if path is not None:
        data = _merge(data, read_config_file(path))
    for override in overrides:
        data = apply_override(data, override)
    if "N" in data:
        data["order"] = data.pop("N")
    if output_dir is not None:
        data["output_dir"] = output_dir
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"invalid experiment config:\n{e}") from e
    if config.order > settings.max_expansion_order:
        raise ConfigurationError(
            f"order {config.order} exceeds max_expansion_order {settings.max_expansion_order}"
        )
    if config.output_dir is None:
        config.output_dir = settings.output_dir
    logger.info(f"Loaded experiment for model '{config.model.name}' (hash {config.config_hash()[:12]})")
    return config


class Check(BaseModel):
    """One numeric claim and the oracle it was checked against."""

    name: str = Field(..., description="What was checked")
    value: Optional[float] = Field(default=None, description="Measured value")
    tolerance: Optional[float] = Field(default=None, description="Bound the value was held to")
    oracle: str = Field(..., description="Reference the value was compared with")
    passed: bool = Field(..., description="Outcome")
    soft: bool = Field(default=False, description="Logged only; does not fail the command")
    detail: str = Field(default="", description="Extra context")


class Provenance(BaseModel):
    application: str = Field(..., description="Application name and version from settings")
    config_hash: str = Field(..., description="sha256 of the validated config")
    command: str = Field(..., description="Command that produced the report")
    versions: Dict[str, str] = Field(default_factory=dict, description="Library versions")
    wall_time: float = Field(default=0.0, description="Seconds spent in the command")
    created_at: str = Field(..., description="UTC timestamp")


def library_versions() -> Dict[str, str]:
    return {
        "modified-kolmogorov": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


class Report(BaseModel):
    """Machine-readable outcome of one command."""

    command: str = Field(..., description="Command name")
    config: Dict[str, Any] = Field(..., description="Validated config the numbers came from")
    checks: List[Check] = Field(default_factory=list, description="Numeric claims")
    results: Dict[str, Any] = Field(default_factory=dict, description="Values, slopes and residuals")
    files: List[str] = Field(default_factory=list, description="Files written next to the report")
    provenance: Provenance

    @computed_field
    @property
    def passed(self) -> bool:
        return all(c.passed or c.soft for c in self.checks)

    @classmethod
    def start(cls, command: str, config: ExperimentConfig, settings: Settings) -> "Report":
        return cls(
            command=command,
            config=config.model_dump(mode="json"),
            provenance=Provenance(
                application=f"{settings.app_name} {settings.app_version}",
                config_hash=config.config_hash(),
                command=command,
                versions=library_versions(),
                created_at=datetime.now(timezone.utc).isoformat(),
            ),
        )

    def check(
        self,
        name: str,
        oracle: str,
        passed: bool,
        value: Optional[float] = None,
        tolerance: Optional[float] = None,
        soft: bool = False,
        detail: str = "",
    ) -> Check:
        """Record a check; soft misses are logged as warnings."""
        entry = Check(
            name=name,
            value=None if value is None else float(value),
            tolerance=tolerance,
            oracle=oracle,
            passed=bool(passed),
            soft=soft,
            detail=detail,
        )
        self.checks.append(entry)
        if not entry.passed:
            log = logger.warning if soft else logger.error
            log(f"{'Soft check' if soft else 'Check'} '{name}' missed: value {value}, tolerance {tolerance}")
        return entry

    def bounded(self, name: str, value: float, tolerance: float, oracle: str, soft: bool = False) -> Check:
        """Record |value| <= tolerance."""
        return self.check(name, oracle, abs(value) <= tolerance, value, tolerance, soft)
