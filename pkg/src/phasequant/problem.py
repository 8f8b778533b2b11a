"""
Quantization problem model.

A problem is the Schrödinger equation written as ψ'' + (P² − U(x))ψ/ħ² = 0
with U(x) = 2mV(x) and P² = 2mE, optionally carrying the Langer radial
term (l+½)²ħ²/r².
"""
import math
from typing import Literal, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import (
    BaseModel, ConfigDict, Field, InstanceOf, field_serializer, field_validator, model_validator,
)

from .errors import DomainViolationError
from .expression import ExprAst, parse

Domain = Literal["full-line", "half-line", "punctured-line"]
PotentialKind = Literal[
    "harmonic", "coulomb", "linear", "cornell", "relativistic_cornell", "custom",
]

DEFAULT_WINDOWS = {
    "full-line": (-50.0, 50.0),
    "half-line": (1e-8, 200.0),
    "punctured-line": (-50.0, 50.0),
}

# Builtins that only make sense for r > 0 (or its continuation through r < 0)
RADIAL_KINDS = {
    "coulomb": ("half-line",),
    "cornell": ("half-line",),
    "relativistic_cornell": ("half-line", "punctured-line"),
}


class Potential(BaseModel):
    """Evaluatable V(x) with domain metadata."""

    model_config = ConfigDict(frozen=True)

    kind: PotentialKind
    domain: Domain = "full-line"
    omega: Optional[float] = Field(default=None, gt=0, description="Oscillator frequency")
    oscillator_mass: float = Field(default=1.0, gt=0, description="Mass entering ½mω²x²")
    e_squared: Optional[float] = Field(default=None, gt=0, description="Coulomb strength e²")
    kappa: Optional[float] = Field(default=None, gt=0, description="Linear slope / string tension")
    alpha_tilde: Optional[float] = Field(default=None, ge=0, description="Coulomb coefficient α̃")
    quark_mass: float = Field(default=0.0, ge=0, description="m in (m − α̃/r + κr)²")
    expr: Optional[InstanceOf[ExprAst]] = None

    @model_validator(mode="after")
    def check_parameters(self) -> "Potential":
        """Every builtin needs its own parameters and a compatible domain."""
        required = {
            "harmonic": ("omega",),
            "coulomb": ("e_squared",),
            "linear": ("kappa",),
            "cornell": ("kappa", "alpha_tilde"),
            "relativistic_cornell": ("kappa", "alpha_tilde"),
            "custom": ("expr",),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} potential requires {', '.join(missing)}")
        allowed = RADIAL_KINDS.get(self.kind)
        if allowed and self.domain not in allowed:
            raise ValueError(f"{self.kind} potential is defined on {' or '.join(allowed)}, not {self.domain}")
        return self

    @field_serializer("expr")
    def serialize_expr(self, expr: Optional[ExprAst]) -> Optional[str]:
        return None if expr is None else str(expr)

    # Builtin constructors

    @classmethod
    def harmonic(cls, omega: float, mass: float = 1.0) -> "Potential":
        return cls(kind="harmonic", omega=omega, oscillator_mass=mass)

    @classmethod
    def coulomb(cls, e_squared: float) -> "Potential":
        return cls(kind="coulomb", e_squared=e_squared, domain="half-line")

    @classmethod
    def linear(cls, kappa: float, domain: Domain = "full-line") -> "Potential":
        return cls(kind="linear", kappa=kappa, domain=domain)

    @classmethod
    def cornell(cls, alpha_tilde: float, kappa: float) -> "Potential":
        return cls(kind="cornell", alpha_tilde=alpha_tilde, kappa=kappa, domain="half-line")

    @classmethod
    def relativistic_cornell(
        cls, m: float, alpha_tilde: float, kappa: float, domain: Domain = "punctured-line"
    ) -> "Potential":
        return cls(
            kind="relativistic_cornell", quark_mass=m, alpha_tilde=alpha_tilde,
            kappa=kappa, domain=domain,
        )

    @classmethod
    def custom(cls, expr: Union[str, ExprAst], domain: Optional[Domain] = None) -> "Potential":
        """User expression; the variable r defaults to the half line, x to the full line."""
        ast = parse(expr) if isinstance(expr, str) else expr
        if domain is None:
            domain = "half-line" if ast.variable == "r" else "full-line"
        return cls(kind="custom", expr=ast, domain=domain)

    def values(self, xs: ArrayLike) -> NDArray[np.float64]:
        """V on an array of points; NaN outside the domain or where V is not finite."""
        x = np.asarray(xs, dtype=np.float64)
        with np.errstate(all="ignore"):
            if self.kind == "harmonic":
                v = 0.5 * self.oscillator_mass * self.omega**2 * x * x
            elif self.kind == "coulomb":
                v = -self.e_squared / x
            elif self.kind == "linear":
                v = self.kappa * np.abs(x)
            elif self.kind == "cornell":
                v = -self.alpha_tilde / x + self.kappa * x
            elif self.kind == "relativistic_cornell":
                v = (self.quark_mass - self.alpha_tilde / x + self.kappa * x) ** 2
            else:
                v = self.expr.evaluate_many(x).values
        inside = np.isfinite(v) & self.in_domain(x)
        return np.where(inside, v, np.nan)

    def value(self, x: float) -> float:
        v = float(self.values(np.array([x]))[0])
        if math.isnan(v):
            raise DomainViolationError(
                f"{self.kind} potential is not defined at x={x!r}", {"point": float(x)}
            )
        return v

    def in_domain(self, xs: ArrayLike) -> NDArray[np.bool_]:
        x = np.asarray(xs, dtype=np.float64)
        if self.domain == "half-line":
            return x > 0
        if self.domain == "punctured-line":
            return x != 0
        return np.ones_like(x, dtype=bool)

    def describe(self) -> str:
        if self.kind == "custom":
            return f"custom({self.expr})"
        params = {
            "harmonic": ("omega", "oscillator_mass"),
            "coulomb": ("e_squared",),
            "linear": ("kappa",),
            "cornell": ("alpha_tilde", "kappa"),
            "relativistic_cornell": ("quark_mass", "alpha_tilde", "kappa"),
        }[self.kind]
        inner = ", ".join(f"{name}={getattr(self, name)!r}" for name in params)
        return f"{self.kind}({inner})"


class Tolerances(BaseModel):
    """Numerical tolerances threaded through the quadrature and root solvers."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=1e-10, gt=0, lt=1, description="Quadrature tolerance")
    root_rel_tol: float = Field(default=1e-12, gt=0, lt=1, description="Root refinement tolerance")
    scan_samples: int = Field(default=2048, ge=2, description="Turning-point scan resolution")


class QuantProblem(BaseModel):
    """Potential plus mass, ħ, optional angular momentum and scan window."""

    model_config = ConfigDict(frozen=True)

    potential: Potential
    mass: float = Field(default=1.0, gt=0)
    hbar: float = Field(default=1.0, gt=0)
    angular: Optional[int] = Field(default=None, ge=0, description="l for the Langer term (l+½)²ħ²/r²")
    window: Optional[Tuple[float, float]] = None
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("window")
    @classmethod
    def validate_window(cls, v: Optional[Tuple[float, float]]) -> Optional[Tuple[float, float]]:
        """Ensure the window is a finite, non-empty interval."""
        if v is None:
            return v
        lo, hi = v
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise ValueError("window must be a finite interval [a, b] with a < b")
        return (float(lo), float(hi))

    @model_validator(mode="after")
    def resolve_window(self) -> "QuantProblem":
        domain = self.potential.domain
        if self.angular is not None and domain == "full-line":
            raise ValueError("the Langer term needs a half-line or punctured-line potential")
        if self.window is None:
            object.__setattr__(self, "window", DEFAULT_WINDOWS[domain])
        elif domain == "half-line" and self.window[0] <= 0:
            raise ValueError("half-line windows must start at r > 0")
        return self

    @property
    def domain(self) -> Domain:
        return self.potential.domain

    def effective_u_many(self, xs: ArrayLike) -> NDArray[np.float64]:
        """U(x) = 2mV(x) (+ Langer term) on an array; NaN at domain violations."""
        x = np.asarray(xs, dtype=np.float64)
        u = 2.0 * self.mass * self.potential.values(x)
        if self.angular is not None:
            with np.errstate(all="ignore"):
                u = u + (self.angular + 0.5) ** 2 * self.hbar**2 / (x * x)
            u = np.where(np.isfinite(u), u, np.nan)
        return u

    def momentum_squared_many(self, energy: float, xs: ArrayLike) -> NDArray[np.float64]:
        """P² − U(x) = 2mE − U(x) on an array; NaN at domain violations."""
        return 2.0 * self.mass * energy - self.effective_u_many(xs)

    def effective_u(self, x: float) -> float:
        u = float(self.effective_u_many(np.array([x]))[0])
        if math.isnan(u):
            raise DomainViolationError(
                f"U is not defined at x={x!r} for {self.potential.describe()}", {"point": float(x)}
            )
        return u

    def momentum_squared(self, energy: float, x: float) -> float:
        return 2.0 * self.mass * energy - self.effective_u(x)


class SpectrumEntry(BaseModel):
    """One quantized level."""

    n: int = Field(..., ge=0, description="Node count / radial quantum number")
    energy: float = Field(..., description="Level energy")
    phase_residual: float = Field(..., ge=0, description="Achieved |W/ħ − target phase|")


def effective_u(problem: QuantProblem, x: float) -> float:
    """U(x) = 2·mass·V(x), plus (l+½)²ħ²/x² when angular momentum is set."""
    return problem.effective_u(x)


def momentum_squared(problem: QuantProblem, energy: float, x: float) -> float:
    """2·mass·E − U(x); negative in classically forbidden regions."""
    return problem.momentum_squared(energy, x)
