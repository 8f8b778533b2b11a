"""
Independent eigensolver for −ψ″ = Q(λ, x)ψ with Q = coef·λ − w(x) and
Dirichlet walls at both grid ends.

Levels are bracketed by counting nodes of the forward Numerov solution,
refined on the discrete Wronskian of the two shooting solutions at a fixed
matching point, and extrapolated once under h → h/2.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import brentq

from .cornell import CornellLevel, CornellParams
from .errors import (
    ConfigurationError,
    GridTooSmallError,
    NoCutsError,
    NumericalFailureError,
    PhaseQuantError,
    ReportMismatchError,
)
from .models import ComparisonReport, ComparisonRow
from .problem import QuantProblem, SpectrumEntry

logger = logging.getLogger(__name__)

# Dirichlet wall for radial problems
R_MIN = 1e-9
# Radial grids starting below this see the origin as their wall
ORIGIN_WALL = 1e-6
DEFAULT_STEP = 1e-3
DECAY_LENGTHS = 15.0
RESCALE_ABOVE = 1e100
MAX_EXPANSIONS = 200
MAX_BISECTIONS = 200
RICHARDSON_DENOMINATOR = 15.0
AUTO_GRID_SAMPLES = 20001


class GridSpec(BaseModel):
    """Uniform grid x_min + k·h, k = 0..steps, with ψ = 0 at both ends."""

    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    h: float = Field(..., gt=0)

    @model_validator(mode="after")
    def check_steps(self) -> "GridSpec":
        if not self.x_max > self.x_min:
            raise ValueError("grid needs x_max > x_min")
        ratio = (self.x_max - self.x_min) / self.h
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ValueError(f"(x_max − x_min)/h = {ratio!r} is not an integer")
        if round(ratio) < 100:
            raise ValueError(f"grid needs at least 100 steps, got {round(ratio)}")
        return self

    @classmethod
    def from_steps(cls, x_min: float, x_max: float, steps: int) -> "GridSpec":
        return cls(x_min=x_min, x_max=x_max, h=(x_max - x_min) / steps)

    @property
    def steps(self) -> int:
        return int(round((self.x_max - self.x_min) / self.h))

    @property
    def points(self) -> NDArray[np.float64]:
        return np.linspace(self.x_min, self.x_max, self.steps + 1)

    def halved(self) -> "GridSpec":
        return GridSpec.from_steps(self.x_min, self.x_max, 2 * self.steps)


@dataclass(frozen=True)
class OracleEquation:
    """−ψ″ = (coef·λ − w(x))ψ; λ is the reported eigenvalue."""

    name: str
    coef: float
    w: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    window: Tuple[float, float]
    radial: bool = False

    def q(self, lam: float, xs: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.coef * lam - self.w(xs)


class OracleLevel(BaseModel):
    index: int = Field(..., ge=0, description="Node count")
    energy: float
    grid_residual: float = Field(..., ge=0, description="|λ(h/2) − λ(h)|")


class OracleSpectrum(BaseModel):
    levels: List[OracleLevel] = Field(default_factory=list)
    error: Optional[dict] = None


class NumerovResult(BaseModel):
    node_count: int
    mismatch: float = Field(..., description="Normalized discrete Wronskian at the matching point")
    log_derivative_mismatch: float
    match_index: int


def schrodinger_equation(problem: QuantProblem, true_centrifugal: bool = True) -> OracleEquation:
    """
    Equation of a QuantProblem in units of ħ²/2m.

    Radial problems use l(l+1)/r² when `true_centrifugal`, else the Langer
    (l+½)²/r²; they are solved on r > 0 only.
    """
    mass, hbar, l = problem.mass, problem.hbar, problem.angular
    scale = 2.0 * mass / hbar**2
    centrifugal = None
    if l is not None:
        centrifugal = l * (l + 1) if true_centrifugal else (l + 0.5) ** 2

    def w(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        out = scale * problem.potential.values(xs)
        if centrifugal is not None:
            with np.errstate(all="ignore"):
                out = out + centrifugal / (xs * xs)
        return out

    lo, hi = problem.window
    radial = problem.domain != "full-line"
    return OracleEquation(
        name=problem.potential.describe(),
        coef=scale,
        w=w,
        window=(R_MIN, hi) if radial else (lo, hi),
        radial=radial,
    )


def cornell_equation(params: CornellParams, r_max: float = 50.0) -> OracleEquation:
    """u″ + [E²/4 − (m − α̃/r + κr)² − (l+½)²/r²]u = 0 with λ = E²."""
    def w(rs: NDArray[np.float64]) -> NDArray[np.float64]:
        with np.errstate(all="ignore"):
            return (params.m - params.alpha_tilde / rs + params.kappa * rs) ** 2 + params.langer**2 / (rs * rs)

    return OracleEquation(
        name=f"cornell(m={params.m!r}, alpha_tilde={params.alpha_tilde!r}, kappa={params.kappa!r}, l={params.l})",
        coef=0.25,
        w=w,
        window=(R_MIN, r_max),
        radial=True,
    )


def _numerov_factors(equation: OracleEquation, grid: GridSpec, lam: float) -> List[float]:
    q = equation.q(lam, grid.points)
    inner = q[1:-1]
    if not np.all(np.isfinite(inner)):
        raise ConfigurationError(f"Q is not finite on the grid for {equation.name}")
    f = 1.0 + grid.h**2 * q / 12.0
    # ψ vanishes at the walls, so their factors never enter the recurrence
    f[0] = f[-1] = 1.0
    return f.tolist()


def _wall_source(equation: OracleEquation, grid: GridSpec) -> float:
    """
    f·ψ at a radial wall next to the origin, where ψ = 0 but Qψ → −c·ψ'(0) for w ~ c/r.

    Zero when r·w has no finite limit there (a centrifugal barrier) or the
    grid starts away from the origin.
    """
    if not equation.radial or grid.x_min > ORIGIN_WALL:
        return 0.0
    rs = np.array([grid.x_min, 2.0 * grid.x_min])
    with np.errstate(all="ignore"):
        near, far = (float(v) for v in rs * equation.w(rs))
    if not (math.isfinite(near) and math.isfinite(far)) or abs(near - far) > 1e-6 * max(1.0, abs(near)):
        return 0.0
    h = grid.h
    # ψ(h) = ψ'(0)·h·(1 + c·h/2) with ψ(h) = 1
    return -near * h / (12.0 * (1.0 + 0.5 * near * h))


def _march(f: List[float], start: int, stop: int, wall: float = 0.0) -> Tuple[float, float, int, bool]:
    """
    Numerov recurrence from ψ(start) = 0, ψ(start ± 1) = 1 up to index `stop`;
    `wall` is the f·ψ term at `start`.

    Returns (ψ(stop ∓ 1), ψ(stop), sign changes, whether the last step changed sign).
    """
    step = 1 if stop > start else -1
    prev, cur = 0.0, 1.0
    carry = wall
    nodes = 0
    changed = False
    k = start + step
    while k != stop:
        nxt = ((12.0 - 10.0 * f[k]) * cur - f[k - step] * prev - carry) / f[k + step]
        carry = 0.0
        changed = (nxt < 0 < cur) or (cur < 0 < nxt)
        if changed:
            nodes += 1
        prev, cur = cur, (nxt if nxt != 0 else math.copysign(0.0, cur))
        if abs(cur) > RESCALE_ABOVE:
            prev /= RESCALE_ABOVE
            cur /= RESCALE_ABOVE
        k += step
    if not (math.isfinite(prev) and math.isfinite(cur)):
        raise NumericalFailureError(f"Numerov recurrence overflowed between indices {start} and {stop}")
    return prev, cur, nodes, changed


def sturm_count(equation: OracleEquation, grid: GridSpec, lam: float) -> int:
    """Sign changes of the forward solution over the whole grid: the number of levels below λ."""
    f = _numerov_factors(equation, grid, lam)
    return _march(f, 0, grid.steps, _wall_source(equation, grid))[2]


def match_index(equation: OracleEquation, grid: GridSpec, lam: float) -> int:
    """Grid point nearest the outermost classical turning point at λ."""
    q = equation.q(lam, grid.points)
    allowed = np.flatnonzero(np.isfinite(q) & (q >= 0))
    m = int(allowed[-1]) if allowed.size else int(np.nanargmax(q))
    return min(max(m, 1), grid.steps - 2)


def numerov_solve(
    equation: OracleEquation, grid: GridSpec, lam: float, match: Optional[int] = None
) -> NumerovResult:
    """
    Shoot from both walls to the matching point.

    Returns the node count of the glued solution and its mismatch; both
    mismatch measures vanish at eigenvalues.
    """
    m = match_index(equation, grid, lam) if match is None else match
    f = _numerov_factors(equation, grid, lam)
    left_m, left_next, left_nodes, last_changed = _march(f, 0, m + 1, _wall_source(equation, grid))
    right_next, right_m, right_nodes, _ = _march(f, grid.steps, m)
    left_nodes -= int(last_changed)
    norm = math.hypot(left_m, left_next) * math.hypot(right_m, right_next)
    wronskian = (left_m * right_next - left_next * right_m) / norm
    with np.errstate(all="ignore"):
        log_derivative = float(
            (np.float64(left_next) / left_m - np.float64(right_next) / right_m) / grid.h
        )
    return NumerovResult(
        node_count=left_nodes + right_nodes,
        mismatch=wronskian,
        log_derivative_mismatch=log_derivative,
        match_index=m,
    )


def _floor(equation: OracleEquation, grid: GridSpec) -> float:
    w = equation.w(grid.points[1:-1])
    return float(np.nanmin(w)) / equation.coef


def _bracket_level(equation: OracleEquation, grid: GridSpec, index: int) -> Tuple[float, float]:
    """(lo, hi) with exactly `index` levels below lo and index + 1 below hi."""
    lo = _floor(equation, grid)
    step = max(1.0, abs(lo))
    hi = lo + step
    for _ in range(MAX_EXPANSIONS):
        if sturm_count(equation, grid, hi) > index:
            break
        lo, step = hi, 2.0 * step
        hi = lo + step
    else:
        raise GridTooSmallError(f"could not bracket level {index} on the grid", {"index": index})

    for _ in range(MAX_BISECTIONS):
        if sturm_count(equation, grid, lo) == index and sturm_count(equation, grid, hi) == index + 1:
            return lo, hi
        mid = 0.5 * (lo + hi)
        if sturm_count(equation, grid, mid) <= index:
            lo = mid
        else:
            hi = mid
    raise NumericalFailureError(f"could not isolate level {index} by node counting", {"index": index})


def _bisect_by_count(equation: OracleEquation, grid: GridSpec, index: int, lo: float, hi: float) -> float:
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if sturm_count(equation, grid, mid) <= index:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_level(equation: OracleEquation, grid: GridSpec, index: int) -> float:
    """Eigenvalue with `index` nodes on one grid."""
    lo, hi = _bracket_level(equation, grid, index)
    m = match_index(equation, grid, 0.5 * (lo + hi))

    def mismatch(lam: float) -> float:
        return numerov_solve(equation, grid, lam, m).mismatch

    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo * f_hi < 0:
        lam = brentq(
            mismatch, lo, hi, xtol=1e-14 * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps, maxiter=MAX_BISECTIONS
        )
    else:
        logger.warning("Wronskian does not change sign for level %d; refining by node count", index)
        lam = _bisect_by_count(equation, grid, index, lo, hi)

    edges = equation.q(lam, np.array([grid.x_min, grid.x_max]))
    if equation.radial:
        edges = edges[1:]
    if np.any(edges >= 0):
        raise GridTooSmallError(
            f"level {index} at {lam!r} is not bound inside [{grid.x_min}, {grid.x_max}]",
            {"index": index, "energy": lam},
        )
    return float(lam)


def oracle_level(equation: OracleEquation, grid: GridSpec, index: int) -> OracleLevel:
    """Level `index` with one Richardson step under h → h/2."""
    coarse = solve_level(equation, grid, index)
    fine = solve_level(equation, grid.halved(), index)
    energy = fine + (fine - coarse) / RICHARDSON_DENOMINATOR
    logger.debug("oracle level %d of %s: %.15g (h-change %.3e)", index, equation.name, energy, abs(fine - coarse))
    return OracleLevel(index=index, energy=energy, grid_residual=abs(fine - coarse))


def oracle_spectrum(
    equation: OracleEquation, grid: GridSpec, index_max: int, workers: int = 1
) -> OracleSpectrum:
    """
    Levels 0..index_max; the first failure ends the list and is recorded in `error`.
    """
    if equation.radial and grid.x_min <= 0:
        raise ConfigurationError("radial grids must start at r > 0")

    def attempt(index: int) -> Union[OracleLevel, PhaseQuantError]:
        try:
            return oracle_level(equation, grid, index)
        except PhaseQuantError as e:
            return e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(attempt, range(index_max + 1)))
    else:
        outcomes = [attempt(index) for index in range(index_max + 1)]

    result = OracleSpectrum()
    for index, outcome in enumerate(outcomes):
        if isinstance(outcome, PhaseQuantError):
            logger.warning("oracle level %d failed: %s", index, outcome.message)
            result.error = {"level": index, **outcome.to_dict()}
            break
        if result.levels and not outcome.energy > result.levels[-1].energy:
            result.error = {
                "level": index,
                **NumericalFailureError(f"oracle level {index} is not above level {index - 1}").to_dict(),
            }
            break
        result.levels.append(outcome)
    return result


def auto_grid(
    equation: OracleEquation, lam: float, h: float = DEFAULT_STEP, decay_lengths: float = DECAY_LENGTHS
) -> GridSpec:
    """
    Grid with step ≈ h whose forbidden tails span at least `decay_lengths`
    of ∫√(−Q) beyond the classical turning points at λ.
    """
    lo, hi = equation.window
    xs = np.linspace(lo, hi, AUTO_GRID_SAMPLES)
    q = equation.q(lam, xs)
    allowed = np.flatnonzero(np.isfinite(q) & (q > 0))
    if not allowed.size:
        raise NoCutsError(f"no classically allowed region for {equation.name} at λ={lam!r}", {"energy": lam})
    decay = np.sqrt(np.clip(np.nan_to_num(-q, nan=0.0), 0.0, None))
    dx = xs[1] - xs[0]

    def reach(indices: NDArray[np.int64]) -> float:
        """First point along `indices` where the accumulated decay exceeds the target."""
        if indices.size < 2:
            return float(xs[indices[-1]]) if indices.size else float(xs[allowed[-1]])
        segment = decay[indices]
        accumulated = np.concatenate(([0.0], np.cumsum(0.5 * (segment[1:] + segment[:-1]) * dx)))
        hit = np.flatnonzero(accumulated >= decay_lengths)
        if not hit.size:
            logger.warning("tail of %s decays by less than %g inside the window", equation.name, decay_lengths)
            return float(xs[indices[-1]])
        return float(xs[indices[hit[0]]])

    x_max = reach(np.arange(allowed[-1], AUTO_GRID_SAMPLES))
    x_min = lo if equation.radial else reach(np.arange(allowed[0], -1, -1))
    steps = max(100, int(math.ceil((x_max - x_min) / h)))
    return GridSpec.from_steps(x_min, x_min + steps * h, steps)


def _index_and_value(level: Union[SpectrumEntry, CornellLevel]) -> Tuple[int, float]:
    if isinstance(level, CornellLevel):
        return level.n_r, level.E_squared
    return level.n, level.energy


def compare_report(
    semiclassical: Sequence[Union[SpectrumEntry, CornellLevel]], oracle: Sequence[OracleLevel]
) -> ComparisonReport:
    """
    Per-level deviations of semiclassical values from oracle eigenvalues.

    Raises:
        ReportMismatchError: the two sides cover different indices
    """
    left = dict(_index_and_value(level) for level in semiclassical)
    right = {level.index: level for level in oracle}
    if sorted(left) != sorted(right):
        raise ReportMismatchError(
            f"semiclassical indices {sorted(left)} do not match oracle indices {sorted(right)}",
            {"semiclassical": sorted(left), "oracle": sorted(right)},
        )
    rows = []
    for index in sorted(left):
        value, reference = left[index], right[index]
        deviation = abs(value - reference.energy)
        rows.append(ComparisonRow(
            index=index,
            semiclassical=value,
            oracle=reference.energy,
            abs_deviation=deviation,
            rel_deviation=deviation / abs(reference.energy) if reference.energy else deviation,
            grid_residual=reference.grid_residual,
        ))
    return ComparisonReport.from_rows(rows)
