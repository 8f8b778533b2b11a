"""
Turning points and reduced-action phase integrals W = ∫√(P² − U) dx.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import minimize_scalar

from .errors import NoCutsError, UnboundedCutError
from .numerics import Bracket, bracket_roots, integrate_sqrt_cut, refine_root, scalarize
from .problem import QuantProblem

logger = logging.getLogger(__name__)

CHEBYSHEV_PROBES = 33
# Cuts closer than this fraction of the window trigger a denser rescan
NARROW_GAP_FRACTION = 1e-3
RESCAN_FACTOR = 4


class TurningPointSet(BaseModel):
    """Simple zeros of P² − U at one energy, grouped into classically allowed cuts."""

    model_config = ConfigDict(frozen=True)

    energy: float
    points: Tuple[float, ...] = Field(..., description="Turning points, strictly increasing")
    cuts: Tuple[Tuple[float, float], ...] = Field(..., description="Intervals where P² − U > 0")

    @field_validator("points")
    @classmethod
    def validate_points(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        """Ensure points are strictly increasing."""
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("turning points must be strictly increasing")
        return v

    @field_validator("cuts")
    @classmethod
    def validate_cuts(cls, v: Tuple[Tuple[float, float], ...]) -> Tuple[Tuple[float, float], ...]:
        """Ensure cuts are non-empty and ordered left to right."""
        for left, right in v:
            if not left < right:
                raise ValueError(f"cut ({left}, {right}) is empty")
        if any(b[0] < a[1] for a, b in zip(v, v[1:])):
            raise ValueError("cuts must be disjoint and ordered")
        return v

    @property
    def nu(self) -> int:
        """Number of cuts."""
        return len(self.cuts)


class PhaseIntegral(BaseModel):
    """Reduced action W (units of action) summed over cuts."""

    model_config = ConfigDict(frozen=True)

    value: float
    per_cut: Tuple[float, ...]
    hbar: float = 1.0

    @model_validator(mode="after")
    def check_sum(self) -> "PhaseIntegral":
        if any(c < 0 for c in self.per_cut):
            raise ValueError("per-cut phase integrals must be non-negative")
        if not math.isclose(self.value, math.fsum(self.per_cut), rel_tol=1e-12, abs_tol=1e-300):
            raise ValueError("value must equal the sum of per-cut integrals")
        return self

    @classmethod
    def from_cuts(cls, per_cut: Sequence[float], hbar: float = 1.0) -> "PhaseIntegral":
        return cls(value=math.fsum(per_cut), per_cut=tuple(per_cut), hbar=hbar)

    @property
    def phase(self) -> float:
        """φ = W/ħ in radians."""
        return self.value / self.hbar


def _momentum_function(problem: QuantProblem, energy: float):
    def p_squared(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        return problem.momentum_squared_many(energy, xs)
    return p_squared


def _singular_points(problem: QuantProblem) -> List[float]:
    lo, hi = problem.window
    if problem.domain == "punctured-line" and lo < 0 < hi:
        return [0.0]
    return []


def _hidden_cut_points(problem: QuantProblem, energy: float, samples: int) -> List[float]:
    """
    Turning points of cuts narrower than the scan spacing.

    A sampled local maximum of P² − U that is negative, flanked by
    negative samples, is refined; if the refined maximum is positive, its two
    zeros are bracketed against the flanking samples.
    """
    f = _momentum_function(problem, energy)
    f_scalar = scalarize(f)
    xs = np.linspace(*problem.window, samples)
    with np.errstate(all="ignore"):
        ys = f(xs)
    left, middle, right = ys[:-2], ys[1:-1], ys[2:]
    candidates = np.flatnonzero(
        (left < 0) & (right < 0) & (middle < 0) & (middle > left) & (middle >= right)
    ) + 1

    def depth(x: float) -> float:
        value = f_scalar(x)
        return -value if math.isfinite(value) else math.inf

    rel_tol = problem.tolerances.root_rel_tol
    points = []
    for i in candidates.tolist():
        a, b = float(xs[i - 1]), float(xs[i + 1])
        result = minimize_scalar(
            depth, bounds=(a, b), method="bounded", options={"xatol": 1e-12 * max(1.0, abs(a))}
        )
        peak, top = float(result.x), -float(result.fun)
        if not (top > 0 and a < peak < b):
            continue
        logger.debug("cut of width below %g around x=%r at E=%r", b - a, peak, energy)
        points.append(refine_root(f_scalar, Bracket(a, peak, float(ys[i - 1]), top), rel_tol))
        points.append(refine_root(f_scalar, Bracket(peak, b, top, float(ys[i + 1])), rel_tol))
    return points


def _locate(problem: QuantProblem, energy: float, samples: int) -> List[float]:
    f = _momentum_function(problem, energy)
    f_scalar = scalarize(f)
    rel_tol = problem.tolerances.root_rel_tol
    points = [refine_root(f_scalar, b, rel_tol) for b in bracket_roots(f, problem.window, samples)]
    return sorted(points + _hidden_cut_points(problem, energy, samples))


def _group(problem: QuantProblem, energy: float, points: List[float]) -> List[Tuple[float, float]]:
    f = _momentum_function(problem, energy)
    lo, hi = problem.window
    singular = _singular_points(problem)
    edges = sorted(set([lo, hi] + singular + points))
    cuts = []
    for a, b in zip(edges, edges[1:]):
        middle = float(f(np.array([0.5 * (a + b)]))[0])
        if not middle > 0:
            continue
        if a == lo or b == hi:
            raise UnboundedCutError(
                f"classically allowed region reaches the window edge at E={energy!r}",
                {"energy": energy, "cut": [a, b]},
            )
        if a in singular or b in singular:
            raise UnboundedCutError(
                f"classically allowed region reaches the singular point at E={energy!r}",
                {"energy": energy, "cut": [a, b]},
            )
        cuts.append((a, b))
    return cuts


def _interior_positive(problem: QuantProblem, energy: float, cut: Tuple[float, float]) -> bool:
    a, b = cut
    k = np.arange(CHEBYSHEV_PROBES)
    probes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(math.pi * (k + 0.5) / CHEBYSHEV_PROBES)
    return bool(np.all(problem.momentum_squared_many(energy, probes) > 0))


def turning_points(problem: QuantProblem, energy: float, samples: Optional[int] = None) -> TurningPointSet:
    """
    Find all simple turning points in the problem window at this energy.

    Args:
        problem: Quantization problem
        energy: Trial energy E
        samples: Scan resolution (defaults to the problem's tolerances)

    Returns:
        TurningPointSet with points and validated cuts

    Raises:
        NoCutsError: no classically allowed interval at this energy
        UnboundedCutError: an allowed interval touches the window edge or a singular point
        DegenerateTurningPointError: a sign change that is not a simple zero
    """
    samples = samples or problem.tolerances.scan_samples
    lo, hi = problem.window
    points = _locate(problem, energy, samples)
    cuts = _group(problem, energy, points)

    gaps = [b[0] - a[1] for a, b in zip(cuts, cuts[1:])]
    if gaps and min(gaps) < NARROW_GAP_FRACTION * (hi - lo):
        logger.debug("cuts within %g of each other at E=%r; rescanning at %dx", min(gaps), energy, RESCAN_FACTOR)
        points = _locate(problem, energy, RESCAN_FACTOR * samples)
        cuts = _group(problem, energy, points)

    accepted = []
    for cut in cuts:
        if _interior_positive(problem, energy, cut):
            accepted.append(cut)
        else:
            logger.warning("rejected cut %s at E=%r: P² − U not positive at every probe", cut, energy)
    if not accepted:
        raise NoCutsError(
            f"no classically allowed region at E={energy!r} for {problem.potential.describe()}",
            {"energy": energy},
        )
    return TurningPointSet(energy=energy, points=tuple(points), cuts=tuple(accepted))


def phase_integral(
    problem: QuantProblem, energy: float, tps: Optional[TurningPointSet] = None
) -> PhaseIntegral:
    """
    Per-cut reduced action ∫√(P² − U) dx and its total.

    Args:
        problem: Quantization problem
        energy: Energy E
        tps: Turning points at the same E (computed when omitted)
    """
    if tps is None:
        tps = turning_points(problem, energy)
    elif tps.energy != energy:
        raise ValueError(f"turning points were computed at E={tps.energy!r}, not {energy!r}")
    g = _momentum_function(problem, energy)
    rel_tol = problem.tolerances.rel_tol
    per_cut = [integrate_sqrt_cut(g, a, b, rel_tol) for a, b in tps.cuts]
    return PhaseIntegral.from_cuts(per_cut, hbar=problem.hbar)
