import math
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import ConfigError

SpectrumKind = Literal["ohmic", "super_ohmic"]
AxisScale = Literal["linear", "log"]
MasterEquation = Literal["dme", "lme"]


def default_fock_dim(g: float, omega0: float = 1.0) -> int:
    """Fock truncation large enough for the displaced oscillator at alpha = g/omega0."""
    alpha = g / omega0
    return int(math.ceil(alpha ** 2 + 8 * alpha + 10))


class ModelParams(BaseModel):
    """On-site Rabi model and lattice parameters, energies in units of omega0."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    omega0: float = Field(1.0, gt=0)
    epsilon: float = Field(1.0, gt=0)
    g: float = Field(0.0, ge=0)
    z: int = Field(3, ge=1)
    fock_dim: Optional[int] = Field(None, ge=2)
    strict_truncation: bool = True

    @model_validator(mode="after")
    def _check_truncation(self):
        if self.fock_dim is not None and self.strict_truncation:
            needed = default_fock_dim(self.g, self.omega0)
            if self.fock_dim < needed:
                raise ValueError(
                    f"fock_dim={self.fock_dim} fails the truncation test at g={self.g}: "
                    f"need at least {needed} (set strict_truncation=false to override)"
                )
        return self

    @property
    def truncation(self) -> int:
        """Number of Fock states N actually used (Hilbert dimension 2N)."""
        if self.fock_dim is not None:
            return self.fock_dim
        return default_fock_dim(self.g, self.omega0)

    @property
    def dim(self) -> int:
        return 2 * self.truncation

    def at_coupling(self, g: float) -> "ModelParams":
        return ModelParams.model_validate({**self.model_dump(), "g": g})

    def with_fock_dim(self, fock_dim: int) -> "ModelParams":
        return ModelParams.model_validate({**self.model_dump(), "fock_dim": fock_dim})


class BathParams(BaseModel):
    """Qubit and cavity baths: strengths, temperatures (k_B = 1) and spectral family."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma_q: float = Field(1e-4, ge=0)
    gamma_c: float = Field(1e-4, ge=0)
    temp_q: float = Field(0.0, ge=0)
    temp_c: float = Field(0.0, ge=0)
    spectrum_kind: SpectrumKind = "ohmic"
    exponent: float = Field(1.0, ge=1.0)
    cutoff: Optional[float] = Field(None, gt=0)  # None means infinite cutoff
    gap_floor: float = Field(1e-9, gt=0)

    @model_validator(mode="after")
    def _check_exponent(self):
        if self.spectrum_kind == "super_ohmic" and self.exponent <= 1.0:
            raise ValueError("super_ohmic baths need exponent > 1")
        return self

    @property
    def s(self) -> float:
        """Spectral exponent actually in use (1 for Ohmic baths)."""
        return self.exponent if self.spectrum_kind == "super_ohmic" else 1.0

    @property
    def is_ohmic(self) -> bool:
        return self.spectrum_kind == "ohmic"

    def with_temperature(self, temp: float) -> "BathParams":
        return BathParams.model_validate({**self.model_dump(), "temp_q": temp, "temp_c": temp})


class SolverOptions(BaseModel):
    """Options of the self-consistent order-parameter iteration."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    tolerance: float = Field(1e-8, gt=0)
    max_iter: int = Field(500, ge=1)
    mixing: float = Field(0.3, ge=0, lt=1)
    oscillation_mixing: float = Field(0.6, ge=0, lt=1)
    psi_threshold: float = Field(1e-3, gt=0)
    seeds: Optional[List[float]] = None  # None -> (0.1, 1.0, g/omega0)
    check_symmetry: bool = False
    master_equation: MasterEquation = "dme"
    full_liouvillian: bool = False
    lme_dim_cap: int = Field(70, ge=2)


class AxisSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    min: float
    max: float
    count: int = Field(..., ge=2)
    scale: AxisScale = "linear"

    @model_validator(mode="after")
    def _check_range(self):
        if not self.min < self.max:
            raise ValueError(f"axis min ({self.min}) must be below max ({self.max})")
        if self.scale == "log" and self.min <= 0:
            raise ValueError("log-scaled axis needs min > 0")
        return self

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


class SweepSpec(BaseModel):
    """Rectangular (g, zJ) scan. model.g is overridden per grid row."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    g_axis: AxisSpec = AxisSpec(min=0.3, max=2.5, count=60, scale="linear")
    zj_axis: AxisSpec = AxisSpec(min=1e-4, max=3e-1, count=60, scale="log")
    model: ModelParams = ModelParams()
    bath: BathParams = BathParams()
    solver: SolverOptions = SolverOptions()
    workers: int = Field(1, ge=1)
    fock_multiplier: int = Field(1, ge=1)
    lme_dim: int = Field(3, ge=1)
    warm_start: bool = True
    progress: bool = False

    @field_validator("g_axis")
    @classmethod
    def _g_nonnegative(cls, axis: AxisSpec) -> AxisSpec:
        if axis.min < 0:
            raise ValueError("g axis must be non-negative")
        return axis

    @field_validator("zj_axis")
    @classmethod
    def _zj_nonnegative(cls, axis: AxisSpec) -> AxisSpec:
        if axis.min < 0:
            raise ValueError("zJ axis must be non-negative")
        return axis

    def model_at(self, g: float) -> ModelParams:
        """Model for one grid row, with the truncation rule scaled by fock_multiplier."""
        p = self.model.at_coupling(float(g))
        if self.fock_multiplier > 1:
            p = p.with_fock_dim(p.truncation * self.fock_multiplier)
        return p


# --- CLI run configuration -------------------------------------------------

class ModelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    omega0: float = 1.0
    epsilon: float = 1.0
    z: int = 3
    fock_dim: Optional[int] = None
    strict_truncation: bool = True

    def params(self, g: float) -> ModelParams:
        return ModelParams(g=g, **self.model_dump())


class BathSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gamma_q: float = 1e-4
    gamma_c: float = 1e-4
    temp: Optional[float] = None  # sets both baths unless temp_q/temp_c are given
    temp_q: Optional[float] = None
    temp_c: Optional[float] = None
    spectrum_kind: SpectrumKind = "ohmic"
    exponent: float = 1.0
    cutoff: Optional[float] = None
    gap_floor: float = 1e-9

    @property
    def temperature_given(self) -> bool:
        return any(t is not None for t in (self.temp, self.temp_q, self.temp_c))

    def params(self) -> BathParams:
        shared = self.temp if self.temp is not None else 0.0
        return BathParams(
            gamma_q=self.gamma_q,
            gamma_c=self.gamma_c,
            temp_q=self.temp_q if self.temp_q is not None else shared,
            temp_c=self.temp_c if self.temp_c is not None else shared,
            spectrum_kind=self.spectrum_kind,
            exponent=self.exponent,
            cutoff=self.cutoff,
            gap_floor=self.gap_floor,
        )


class PointSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    g: Optional[float] = None
    zj: Optional[float] = None
    seed: Optional[float] = None


class SweepSection(BaseModel):
    """Sweep axes. Ranges have no defaults and must be given for sweeps."""

    model_config = ConfigDict(extra="forbid")

    g_min: Optional[float] = None
    g_max: Optional[float] = None
    g_count: Optional[int] = None
    zj_min: Optional[float] = None
    zj_max: Optional[float] = None
    zj_count: Optional[int] = None
    zj_scale: AxisScale = "log"
    fock_multiplier: int = 1
    workers: int = 1
    warm_start: bool = True

    def axes(self) -> tuple:
        for key in ("g_min", "g_max", "g_count", "zj_min", "zj_max", "zj_count"):
            if getattr(self, key) is None:
                raise ConfigError(f"sweep.{key} is required for this command", key=f"sweep.{key}")
        try:
            g_axis = AxisSpec(min=self.g_min, max=self.g_max, count=self.g_count, scale="linear")
            zj_axis = AxisSpec(min=self.zj_min, max=self.zj_max, count=self.zj_count, scale=self.zj_scale)
        except ValueError as e:
            raise ConfigError(f"invalid sweep axis: {e}", key="sweep") from e
        return g_axis, zj_axis


class AnalyticSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lme_dim: int = 3
    g_min: float = 0.3
    g_max: float = 2.5
    g_count: int = 23
    zj_values: List[float] = [1.5e-3]


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "results"
    out: Optional[str] = None
    heatmap: Optional[str] = None
    from_csv: Optional[str] = None
    strict: bool = False


class RunConfig(BaseModel):
    """Everything a CLI command needs, as read from a TOML file plus flag overrides."""

    model_config = ConfigDict(extra="forbid")

    model: ModelSection = ModelSection()
    bath: BathSection = BathSection()
    point: PointSection = PointSection()
    sweep: SweepSection = SweepSection()
    solver: SolverOptions = SolverOptions()
    analytic: AnalyticSection = AnalyticSection()
    output: OutputSection = OutputSection()

    def sweep_spec(self) -> SweepSpec:
        g_axis, zj_axis = self.sweep.axes()
        return SweepSpec(
            g_axis=g_axis,
            zj_axis=zj_axis,
            model=self.model.params(g=g_axis.min),
            bath=self.bath.params(),
            solver=self.solver,
            workers=self.sweep.workers,
            fock_multiplier=self.sweep.fock_multiplier,
            lme_dim=self.analytic.lme_dim,
            warm_start=self.sweep.warm_start,
        )
