"""
"Classical" piecewise wavefunction, connection formulas, the standing-wave
representation and the adiabatic momentum-constraint diagnostic.

For a level with turning points x₁ < x₂ the wavefunction is

    I   (x < x₁):   e^{φ−φ₁}/√2
    II  (x₁..x₂):   cos(φ − φ₁ − π/4)  =  (−1)ⁿ cos(φ₂ − φ − π/4)
    III (x > x₂):   (−1)ⁿ e^{−φ+φ₂}/√2

times one overall constant fixed by numerical normalization.
"""
import cmath
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import brentq

from .action import phase_integral, turning_points
from .errors import CutCountMismatchError, PhaseConsistencyError
from .numerics import integrate_sqrt_panels, panel_quadrature
from .problem import QuantProblem, SpectrumEntry

logger = logging.getLogger(__name__)

QUARTER = math.pi / 4
# Value of the cosine branch at a turning point; region I/III prefactor
EDGE = float(np.cos(-QUARTER))
PHASE_CONSISTENCY_TOL = 1e-8
TABLE_PANELS = 1024
PANEL_ORDER = 16
NODE_GRID = 10_000
CONSTRAINT_GRID = 2001
CONSTRAINT_INTERIOR = 0.9


class ConnectionCoefficients(BaseModel):
    """Oscillatory (A, B) and exponential (C, D) coefficients at one turning point."""

    model_config = ConfigDict(frozen=True)

    A: complex
    B: complex
    C: float
    D: float
    k: int = 1

    def matching_residuals(self) -> Tuple[float, float]:
        """|A+B − (C+D)| and |i(A−B) − (−C+D)|."""
        return (
            abs(self.A + self.B - (self.C + self.D)),
            abs(1j * (self.A - self.B) - (-self.C + self.D)),
        )


def connect(C: float, D: float, k: int = 1) -> ConnectionCoefficients:
    """
    Oscillatory coefficients continuing C e^{−(φ−φₖ)} + D e^{φ−φₖ} through a turning point.

    A = (C e^{iπ/4} + D e^{−iπ/4})/√2,  B = (C e^{−iπ/4} + D e^{iπ/4})/√2
    """
    if C == 0 and D == 0:
        raise ValueError("connect needs (C, D) != (0, 0)")
    plus = cmath.exp(1j * QUARTER) / math.sqrt(2)
    minus = cmath.exp(-1j * QUARTER) / math.sqrt(2)
    return ConnectionCoefficients(A=C * plus + D * minus, B=C * minus + D * plus, C=C, D=D, k=k)


class _PhaseTable:
    """
    Running integral |∫_start^x √g dx| tabulated on clustered knots.

    Lookups add the tabulated prefix to one fixed-order panel integral.
    """

    def __init__(self, g, start: float, end: float, fractions: NDArray[np.float64]):
        self.g = g
        self.start = start
        self.sign = 1.0 if end >= start else -1.0
        self.length = abs(end - start)
        self.distances = self.length * fractions
        knots = start + self.sign * self.distances
        panels = integrate_sqrt_panels(g, knots[:-1], knots[1:], PANEL_ORDER)
        self.cumulative = np.concatenate(([0.0], np.cumsum(np.abs(panels))))
        self.knots = knots

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    def __call__(self, xs: NDArray[np.float64]) -> NDArray[np.float64]:
        d = np.clip(self.sign * (xs - self.start), 0.0, self.length)
        idx = np.clip(np.searchsorted(self.distances, d, side="right") - 1, 0, len(self.distances) - 2)
        knot = self.start + self.sign * self.distances[idx]
        x = self.start + self.sign * d
        partial = np.abs(integrate_sqrt_panels(self.g, knot, x, PANEL_ORDER))
        return self.cumulative[idx] + partial


def _cosine_fractions(panels: int) -> NDArray[np.float64]:
    k = np.arange(panels + 1)
    return 0.5 * (1.0 - np.cos(math.pi * k / panels))


def _tail_fractions(panels: int) -> NDArray[np.float64]:
    return (np.arange(panels + 1) / panels) ** 2


@dataclass(frozen=True)
class PiecewiseWavefunction:
    """Normalized three-region wavefunction of one quantized level."""

    n: int
    energy: float
    x1: float
    x2: float
    phi1: float
    phi2: float
    amplitude: float
    window: Tuple[float, float]
    hbar: float
    _left: _PhaseTable
    _right: _PhaseTable
    _tail_left: _PhaseTable
    _tail_right: _PhaseTable

    @property
    def sign(self) -> int:
        """(−1)ⁿ, the relative sign of region III."""
        return -1 if self.n % 2 else 1

    @property
    def total_phase(self) -> float:
        return self.phi2 - self.phi1

    def _shape(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """Unnormalized ψ on an array."""
        lo, hi = self.window
        middle = 0.5 * (self.x1 + self.x2)
        out = np.zeros_like(x)
        region_1 = (x >= lo) & (x < self.x1)
        left_2 = (x >= self.x1) & (x <= middle)
        right_2 = (x > middle) & (x <= self.x2)
        region_3 = (x > self.x2) & (x <= hi)
        if region_1.any():
            out[region_1] = EDGE * np.exp(-self._tail_left(x[region_1]) / self.hbar)
        if left_2.any():
            out[left_2] = np.cos(self._left(x[left_2]) / self.hbar - QUARTER)
        if right_2.any():
            out[right_2] = self.sign * np.cos(self._right(x[right_2]) / self.hbar - QUARTER)
        if region_3.any():
            out[region_3] = self.sign * EDGE * np.exp(-self._tail_right(x[region_3]) / self.hbar)
        return out

    def __call__(self, x: Union[float, ArrayLike]) -> Union[float, NDArray[np.float64]]:
        xs = np.asarray(x, dtype=np.float64)
        values = self.amplitude * self._shape(np.atleast_1d(xs))
        return float(values[0]) if xs.ndim == 0 else values.reshape(xs.shape)

    def region(self, x: float) -> str:
        """Region label I, II or III (empty outside the window)."""
        lo, hi = self.window
        if x < lo or x > hi:
            return ""
        if x < self.x1:
            return "I"
        if x <= self.x2:
            return "II"
        return "III"


def build_classical_wf(problem: QuantProblem, entry: SpectrumEntry) -> PiecewiseWavefunction:
    """
    Build and normalize the piecewise wavefunction of a quantized level.

    Args:
        problem: Problem the level was quantized on
        entry: Result of quantize_2tp for this problem

    Raises:
        CutCountMismatchError: the level does not have exactly one cut
        PhaseConsistencyError: |φ₂ − φ₁ − π(n+½)| > 1e−8
    """
    energy = entry.energy
    tps = turning_points(problem, energy)
    if tps.nu != 1:
        raise CutCountMismatchError(
            f"the classical wavefunction needs one cut, found {tps.nu} at E={energy!r}",
            found=tps.nu, expected=1,
        )
    x1, x2 = tps.cuts[0]
    total = phase_integral(problem, energy, tps).phase
    expected = math.pi * (entry.n + 0.5)
    if abs(total - expected) > PHASE_CONSISTENCY_TOL:
        raise PhaseConsistencyError(
            f"phase across the cut is {total!r}, level {entry.n} needs {expected!r}",
            {"phase": total, "expected": expected},
        )

    def inside(xs):
        return problem.momentum_squared_many(energy, xs)

    def outside(xs):
        v = -problem.momentum_squared_many(energy, xs)
        return np.where(np.isnan(v), np.inf, v)

    lo, hi = problem.window
    middle_fractions = _cosine_fractions(TABLE_PANELS)
    tail_fractions = _tail_fractions(TABLE_PANELS)
    wf = PiecewiseWavefunction(
        n=entry.n,
        energy=energy,
        x1=x1,
        x2=x2,
        phi1=-0.5 * total,
        phi2=0.5 * total,
        amplitude=1.0,
        window=(lo, hi),
        hbar=problem.hbar,
        _left=_PhaseTable(inside, x1, x2, middle_fractions),
        _right=_PhaseTable(inside, x2, x1, middle_fractions),
        _tail_left=_PhaseTable(outside, x1, lo, tail_fractions),
        _tail_right=_PhaseTable(outside, x2, hi, tail_fractions),
    )
    norm = _norm_squared(wf)
    logger.debug("level %d: x1=%r x2=%r norm^2=%.12g", entry.n, x1, x2, norm)
    return replace(wf, amplitude=1.0 / math.sqrt(norm))


def _norm_squared(wf: PiecewiseWavefunction) -> float:
    """∫|ψ|² over the window, panel by panel on the phase-table knots."""
    def density(xs):
        return wf(xs) ** 2

    total = 0.0
    for table in (wf._tail_left, wf._left, wf._tail_right):
        knots = np.sort(table.knots)
        total += float(np.abs(panel_quadrature(density, knots[:-1], knots[1:], PANEL_ORDER)).sum())
    return total


def eval_wf(wf: PiecewiseWavefunction, x: Union[float, ArrayLike]) -> Union[float, NDArray[np.float64]]:
    """ψ(x); zero outside the window."""
    return wf(x)


def node_positions(wf: PiecewiseWavefunction) -> List[float]:
    """Zeros strictly inside (x₁, x₂): grid sign changes refined by bisection."""
    xs = np.linspace(wf.x1, wf.x2, NODE_GRID + 2)[1:-1]
    ys = wf(xs)
    nonzero = ys != 0
    xs, ys = xs[nonzero], ys[nonzero]
    changes = np.flatnonzero(np.sign(ys[:-1]) * np.sign(ys[1:]) < 0)
    return [float(brentq(wf, xs[i], xs[i + 1], xtol=1e-14)) for i in changes]


def node_count(wf: PiecewiseWavefunction) -> int:
    """Number of sign changes strictly inside (x₁, x₂)."""
    return len(node_positions(wf))


def sample_wf(wf: PiecewiseWavefunction, samples: int, margin: float = 0.5) -> List[Tuple[float, float, str]]:
    """
    Rows (x, ψ, region) on a uniform grid covering the cut plus `margin`
    cut-lengths of each tail, clipped to the window.
    """
    lo, hi = wf.window
    width = wf.x2 - wf.x1
    xs = np.linspace(max(lo, wf.x1 - margin * width), min(hi, wf.x2 + margin * width), samples)
    values = wf(xs)
    return [(float(x), float(v), wf.region(float(x))) for x, v in zip(xs, values)]


class StandingWave(BaseModel):
    """ψ = C_n cos(k_n x + πn/2) with C_n = √(2k_n/(π(n+½)+1))."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0)
    k_n: float = Field(..., gt=0, description="P_n/ħ")
    C_n: float = 0.0

    @model_validator(mode="after")
    def compute_norm(self) -> "StandingWave":
        object.__setattr__(self, "C_n", math.sqrt(2.0 * self.k_n / (math.pi * (self.n + 0.5) + 1.0)))
        return self

    def __call__(self, x: Union[float, ArrayLike]) -> Union[float, NDArray[np.float64]]:
        values = self.C_n * np.cos(self.k_n * np.asarray(x, dtype=np.float64) + 0.5 * math.pi * self.n)
        return float(values) if np.ndim(values) == 0 else values

    @property
    def cell(self) -> Tuple[float, float]:
        """Symmetric interval spanning the phase π(n+½)."""
        half = 0.5 * math.pi * (self.n + 0.5) / self.k_n
        return (-half, half)


def standing_wave(n: int, k_n: float) -> StandingWave:
    return StandingWave(n=n, k_n=k_n)


class StandingWaveNorm(BaseModel):
    formula: float
    numeric: float
    relative_discrepancy: float


def standing_wave_norm(wave: StandingWave) -> StandingWaveNorm:
    """Compare C_n with the constant that normalizes the cosine over its phase cell."""
    a, b = wave.cell
    edges = np.linspace(a, b, 65)

    def density(xs):
        return np.cos(wave.k_n * xs + 0.5 * math.pi * wave.n) ** 2

    integral = float(panel_quadrature(density, edges[:-1], edges[1:], PANEL_ORDER).sum())
    numeric = 1.0 / math.sqrt(integral)
    return StandingWaveNorm(
        formula=wave.C_n,
        numeric=numeric,
        relative_discrepancy=abs(wave.C_n - numeric) / numeric,
    )


def constraint_diagnostic(problem: QuantProblem, energy: float, interior: Optional[float] = None) -> float:
    """
    max ħ|W″|/W′² over the interior fraction of the cut (default 90%).

    Small values mean the momentum changes adiabatically across the cut.
    """
    interior = CONSTRAINT_INTERIOR if interior is None else interior
    tps = turning_points(problem, energy)
    if tps.nu != 1:
        raise CutCountMismatchError(
            f"the constraint diagnostic needs one cut, found {tps.nu}", found=tps.nu, expected=1
        )
    x1, x2 = tps.cuts[0]
    margin = 0.5 * (1.0 - interior) * (x2 - x1)
    xs = np.linspace(x1 + margin, x2 - margin, CONSTRAINT_GRID)
    w1 = np.sqrt(problem.momentum_squared_many(energy, xs))
    w2 = np.gradient(w1, xs, edge_order=2)
    return float(np.max(problem.hbar * np.abs(w2) / w1**2))
