"""
Pydantic models for run configuration and report payloads.
"""
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import Settings
from .problem import Domain, Potential, QuantProblem, SpectrumEntry, Tolerances

Command = Literal["spectrum", "wavefunction", "cornell", "verify", "identity-check"]
BuiltinKind = Literal["harmonic", "coulomb", "linear", "cornell", "relativistic_cornell"]


class PotentialConfig(BaseModel):
    """A builtin potential with its parameters, or a custom expression."""
    model_config = ConfigDict(extra="forbid")

    kind: Optional[BuiltinKind] = Field(default=None, description="Builtin potential name")
    expr: Optional[str] = Field(default=None, description="Custom V(x) or V(r) expression")
    omega: Optional[float] = Field(default=None, gt=0, description="Oscillator frequency")
    e_squared: Optional[float] = Field(default=None, gt=0, description="Coulomb strength e^2")
    kappa: Optional[float] = Field(default=None, gt=0, description="Linear slope / string tension")
    alpha_tilde: Optional[float] = Field(default=None, ge=0, description="Coulomb coefficient of the Cornell potential")
    alpha_s: Optional[float] = Field(default=None, ge=0, description="Strong coupling, alpha_tilde = 4/3 alpha_s")
    quark_mass: float = Field(default=0.0, ge=0, description="m in the relativistic Cornell potential")
    domain: Optional[Domain] = Field(default=None, description="Override the natural domain")

    @model_validator(mode="after")
    def check_source(self) -> "PotentialConfig":
        """Exactly one of kind/expr; at most one Coulomb coupling."""
        if (self.kind is None) == (self.expr is None):
            raise ValueError("give exactly one of potential kind or expr")
        if self.alpha_tilde is not None and self.alpha_s is not None:
            raise ValueError("give alpha_tilde or alpha_s, not both")
        return self

    def to_potential(self) -> Potential:
        if self.expr is not None:
            return Potential.custom(self.expr, self.domain)
        alpha_tilde = self.alpha_tilde
        if self.alpha_s is not None:
            alpha_tilde = 4.0 * self.alpha_s / 3.0
        fields: Dict[str, Any] = {
            "kind": self.kind, "omega": self.omega, "e_squared": self.e_squared,
            "kappa": self.kappa, "alpha_tilde": alpha_tilde, "quark_mass": self.quark_mass,
        }
        if self.domain is not None:
            fields["domain"] = self.domain
        elif self.kind in ("coulomb", "cornell"):
            fields["domain"] = "half-line"
        elif self.kind == "relativistic_cornell":
            fields["domain"] = "punctured-line"
        return Potential(**fields)


class ToleranceConfig(BaseModel):
    """Tolerance overrides; unset fields fall back to settings."""
    model_config = ConfigDict(extra="forbid")

    rel_tol: Optional[float] = Field(default=None, gt=0, lt=1, description="Quadrature tolerance")
    root_rel_tol: Optional[float] = Field(default=None, gt=0, lt=1, description="Root tolerance")
    scan_samples: Optional[int] = Field(default=None, ge=2, description="Turning-point scan resolution")

    def resolve(self, settings: Settings) -> Tolerances:
        return Tolerances(
            rel_tol=self.rel_tol or settings.rel_tol,
            root_rel_tol=self.root_rel_tol or settings.root_rel_tol,
            scan_samples=self.scan_samples or settings.scan_samples,
        )


class CornellConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kappa: float = Field(default=0.2, gt=0, description="String tension (GeV^2)")
    alpha_tilde: Optional[float] = Field(default=None, ge=0)
    alpha_s: Optional[float] = Field(default=None, ge=0)
    mass: float = Field(default=0.0, ge=0, description="Quark mass (GeV)")
    l: int = Field(default=0, ge=0)
    n_r_max: int = Field(default=5, ge=0)
    l_max: int = Field(default=0, ge=0)
    shift_c: Optional[float] = Field(default=None, description="C in M^2 = E^2 - C^2")

    @model_validator(mode="after")
    def check_coupling(self) -> "CornellConfig":
        if self.alpha_tilde is not None and self.alpha_s is not None:
            raise ValueError("give alpha_tilde or alpha_s, not both")
        return self

    def resolved_alpha_tilde(self) -> float:
        if self.alpha_s is not None:
            return 4.0 * self.alpha_s / 3.0
        return 0.5 if self.alpha_tilde is None else self.alpha_tilde


class RunConfig(BaseModel):
    """Everything one CLI or API run needs; echoed back in every report."""
    model_config = ConfigDict(extra="forbid")

    command: Command = "spectrum"
    potential: Optional[PotentialConfig] = None
    mass: float = Field(default=1.0, gt=0)
    hbar: float = Field(default=1.0, gt=0)
    l: Optional[int] = Field(default=None, ge=0, description="Angular momentum for the Langer term")
    window: Optional[Tuple[float, float]] = None
    n_max: int = Field(default=10, ge=0)
    n: int = Field(default=0, ge=0, description="Level for the wavefunction command")
    samples: int = Field(default=401, ge=2, description="Wavefunction sample count")
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    format: Literal["json", "csv"] = "json"
    out: Optional[str] = None
    seed: int = 0
    sweeps: int = Field(default=20, ge=1)
    grid_h: Optional[float] = Field(default=None, gt=0, description="Oracle step")
    problem: Optional[Literal["harmonic", "coulomb", "cornell"]] = Field(
        default=None, description="Verify target"
    )
    cornell: Optional[CornellConfig] = None
    workers: Optional[int] = Field(default=None, ge=1)

    @field_validator("window")
    @classmethod
    def validate_window(cls, v: Optional[Tuple[float, float]]) -> Optional[Tuple[float, float]]:
        """Ensure the window is a finite interval."""
        if v is not None and not (math.isfinite(v[0]) and math.isfinite(v[1]) and v[0] < v[1]):
            raise ValueError("window must be two finite numbers a < b")
        return v

    @model_validator(mode="after")
    def check_command_inputs(self) -> "RunConfig":
        if self.command in ("spectrum", "wavefunction") and self.potential is None:
            raise ValueError(f"{self.command} needs a potential")
        if self.format == "csv" and self.command not in ("wavefunction", "cornell"):
            raise ValueError("csv output is available for wavefunction and cornell only")
        return self

    def build_problem(self, settings: Settings) -> QuantProblem:
        return QuantProblem(
            potential=self.potential.to_potential(),
            mass=self.mass,
            hbar=self.hbar,
            angular=self.l,
            window=self.window,
            tolerances=self.tolerances.resolve(settings),
        )

    def resolved(self, settings: Settings) -> Dict[str, Any]:
        """Config with defaults filled in from settings."""
        data = self.model_dump(mode="json")
        data["tolerances"] = self.tolerances.resolve(settings).model_dump()
        data["workers"] = self.workers or settings.workers
        return data


class ErrorInfo(BaseModel):
    """Structured failure carried in reports instead of partial output."""
    model_config = ConfigDict(extra="allow")

    type: str
    message: str
    exit_code: int
    level: Optional[int] = None


class SpectrumReport(BaseModel):
    levels: List[SpectrumEntry] = Field(default_factory=list)
    error: Optional[ErrorInfo] = None


class IdentitySweepReport(BaseModel):
    samples: List[Dict[str, Any]]
    max_residual: float
    max_scaled_residual: float = Field(..., description="max residual / tolerance")
    passed: bool


class ComparisonRow(BaseModel):
    index: int
    semiclassical: float
    oracle: float
    abs_deviation: float
    rel_deviation: float
    grid_residual: float


class ComparisonReport(BaseModel):
    rows: List[ComparisonRow]
    max_abs_deviation: float
    mean_abs_deviation: float
    max_rel_deviation: float
    mean_rel_deviation: float

    @classmethod
    def from_rows(cls, rows: List[ComparisonRow]) -> "ComparisonReport":
        absolute = [row.abs_deviation for row in rows] or [0.0]
        relative = [row.rel_deviation for row in rows] or [0.0]
        return cls(
            rows=rows,
            max_abs_deviation=max(absolute),
            mean_abs_deviation=math.fsum(absolute) / len(absolute),
            max_rel_deviation=max(relative),
            mean_rel_deviation=math.fsum(relative) / len(relative),
        )
