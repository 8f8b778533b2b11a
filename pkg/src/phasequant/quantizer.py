"""
Quantization conditions: the two-turning-point rule W = πħ(n+½) and the
multi-turning-point rule where the real-cut sum equals πħ(N + μ/4).
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.optimize import brentq, minimize_scalar

from .action import phase_integral, turning_points
from .errors import (
    BracketExpansionError,
    ConfigurationError,
    CutCountMismatchError,
    NoCutsError,
    NumericalFailureError,
    PhaseQuantError,
    UnboundedCutError,
)
from .problem import QuantProblem, SpectrumEntry

logger = logging.getLogger(__name__)

PRESCAN_ENERGIES = 64
MAX_EXPANSIONS = 400
FLOOR_OFFSET = 1e-9
MAX_ENERGY_ITERATIONS = 200


class QuantizationTarget(BaseModel):
    """Which quantization condition to solve."""

    mode: Literal["two_tp", "multi_tp"] = "two_tp"
    n: int = Field(default=0, ge=0, description="Level for two_tp")
    N: int = Field(default=0, ge=0, description="Total number of zeros for multi_tp")
    mu: int = Field(default=2, description="Maslov index, number of turning points")

    @model_validator(mode="after")
    def check_maslov_index(self) -> "QuantizationTarget":
        if self.mu < 2 or self.mu % 2:
            raise ValueError("Maslov index mu must be even and at least 2")
        return self

    @property
    def level(self) -> int:
        return self.n if self.mode == "two_tp" else self.N

    @property
    def expected_cuts(self) -> Optional[int]:
        return None if self.mode == "two_tp" else self.mu // 2

    def target_phase(self, hbar: float) -> float:
        """Required real-cut action: half the contour value for multi_tp."""
        if self.mode == "two_tp":
            return math.pi * hbar * (self.n + 0.5)
        return math.pi * hbar * (self.N + self.mu / 4)

    def contour_value(self, hbar: float) -> float:
        return 2.0 * self.target_phase(hbar)


class SpectrumResult(BaseModel):
    """Levels 0..n_max, or the levels below the first failure plus its error."""

    levels: List[SpectrumEntry] = Field(default_factory=list)
    error: Optional[Dict[str, Any]] = None

    @property
    def energies(self) -> List[float]:
        return [level.energy for level in self.levels]


def energy_floor(problem: QuantProblem) -> float:
    """min U / 2m over the window: sample scan followed by bounded refinement."""
    lo, hi = problem.window
    samples = problem.tolerances.scan_samples
    xs = np.linspace(lo, hi, samples)
    u = problem.effective_u_many(xs)
    if not np.any(np.isfinite(u)):
        raise ConfigurationError(f"U is undefined everywhere on the window [{lo}, {hi}]")
    i = int(np.nanargmin(u))
    u_min = float(u[i])

    def u_scalar(x: float) -> float:
        value = float(problem.effective_u_many(np.array([x]))[0])
        return value if math.isfinite(value) else math.inf

    left, right = xs[max(i - 1, 0)], xs[min(i + 1, samples - 1)]
    if left < right:
        result = minimize_scalar(u_scalar, bounds=(left, right), method="bounded", options={"xatol": 1e-12})
        if result.success and math.isfinite(result.fun):
            u_min = min(u_min, float(result.fun))
    return u_min / (2.0 * problem.mass)


def _phase(problem: QuantProblem, energy: float) -> Tuple[float, int]:
    """Total real-cut action and cut count; zero below the first resolvable cut."""
    try:
        tps = turning_points(problem, energy)
    except NoCutsError:
        return 0.0, 0
    return phase_integral(problem, energy, tps).value, tps.nu


def _lowest_energy(problem: QuantProblem, floor: float, scale: float) -> float:
    """First of floor + FLOOR_OFFSET·10^k·scale at which the phase can be evaluated."""
    offset = FLOOR_OFFSET
    while offset < 1.0:
        energy = floor + offset * scale
        try:
            _phase(problem, energy)
            return energy
        except UnboundedCutError:
            raise BracketExpansionError(
                f"no bound states: the allowed region at the floor E={floor!r} of "
                f"{problem.potential.describe()} is not enclosed by turning points",
                {"floor": floor},
            )
        except NumericalFailureError as e:
            logger.debug("phase not computable at E=%r (%s); moving up", energy, e.message)
            offset *= 10.0
    raise NumericalFailureError(f"phase integral cannot be evaluated near the floor E={floor!r}", {"floor": floor})


def bracket_energy(problem: QuantProblem, goal: float) -> Tuple[float, float]:
    """
    Energies (lo, hi) with phase(lo) ≤ goal < phase(hi).

    Starts just above the potential floor, at the lowest energy whose phase
    can be evaluated, and doubles the offset; when the allowed region escapes
    the window or a trial lands where the phase cannot be evaluated (a barrier
    top), the trial energy is pulled back halfway.
    """
    floor = energy_floor(problem)
    scale = max(1.0, abs(floor))
    e_lo = _lowest_energy(problem, floor, scale)
    good = e_lo
    trial = e_lo + scale
    for _ in range(MAX_EXPANSIONS):
        try:
            phase, _ = _phase(problem, trial)
        except (UnboundedCutError, NumericalFailureError):
            trial = 0.5 * (good + trial)
            if trial - good <= 1e-13 * scale:
                break
            continue
        if phase > goal:
            logger.debug("bracketed goal %.12g between E=%r and E=%r", goal, good, trial)
            return good, trial
        good = trial
        trial = e_lo + 2.0 * (trial - e_lo)
    raise BracketExpansionError(
        f"no bound states: could not reach phase {goal:.6g} for {problem.potential.describe()} "
        f"inside window {list(problem.window)}",
        {"goal": goal, "last_bounded_energy": good},
    )


def _restrict_to_constant_nu(
    problem: QuantProblem, lo: float, hi: float, goal: float, expected: int
) -> Tuple[float, float]:
    energies = np.linspace(lo, hi, PRESCAN_ENERGIES).tolist()
    phases, counts = [], []
    for energy in energies:
        try:
            phase, nu = _phase(problem, energy)
        except (UnboundedCutError, NumericalFailureError) as e:
            logger.debug("no phase at E=%r during the cut-count scan: %s", energy, e.message)
            phase, nu = math.inf, -1
        phases.append(phase)
        counts.append(nu)
    if set(c for c in counts if c > 0) <= {expected}:
        return lo, hi

    runs: List[Tuple[int, int]] = []
    start = None
    for i, nu in enumerate(counts + [None]):
        if nu == expected and start is None:
            start = i
        elif nu != expected and start is not None:
            runs.append((start, i - 1))
            start = None
    runs.sort(key=lambda r: (-(energies[r[1]] - energies[r[0]]), energies[r[0]]))
    for first, last in runs:
        if phases[first] <= goal < phases[last]:
            logger.debug("restricted search to E in [%r, %r] with nu=%d", energies[first], energies[last], expected)
            return energies[first], energies[last]
    crossing = next((i for i, p in enumerate(phases) if p > goal), len(phases) - 1)
    raise CutCountMismatchError(
        f"no energy range with {expected} cuts reaches the target phase; "
        f"found {counts[crossing]} cuts there",
        found=counts[crossing], expected=expected,
    )


def solve_level(problem: QuantProblem, target: QuantizationTarget) -> SpectrumEntry:
    """Solve one quantization condition for its energy."""
    goal = target.target_phase(problem.hbar)
    lo, hi = bracket_energy(problem, goal)
    expected = target.expected_cuts
    if expected is not None:
        lo, hi = _restrict_to_constant_nu(problem, lo, hi, goal, expected)

    def mismatch(energy: float) -> float:
        return _phase(problem, energy)[0] - goal

    rel_tol = problem.tolerances.root_rel_tol
    try:
        energy, info = brentq(
            mismatch, lo, hi,
            xtol=rel_tol * max(abs(lo), abs(hi), 1e-300), rtol=max(rel_tol, 4 * np.finfo(float).eps),
            maxiter=MAX_ENERGY_ITERATIONS, full_output=True, disp=False,
        )
    except ValueError as e:
        raise NumericalFailureError(f"energy search failed on [{lo}, {hi}]: {str(e)}")
    if not info.converged:
        raise NumericalFailureError(
            f"energy search did not converge for level {target.level}",
            {"iterations": info.iterations},
        )

    tps = turning_points(problem, energy)
    if expected is not None and tps.nu != expected:
        raise CutCountMismatchError(
            f"solution E={energy!r} has {tps.nu} cuts, Maslov index {target.mu} needs {expected}",
            found=tps.nu, expected=expected,
        )
    action = phase_integral(problem, energy, tps)
    residual = abs(action.phase - goal / problem.hbar)
    logger.debug("level %d (%s): E=%.15g residual=%.3e", target.level, target.mode, energy, residual)
    return SpectrumEntry(n=target.level, energy=float(energy), phase_residual=residual)


def quantize_2tp(problem: QuantProblem, n: int) -> SpectrumEntry:
    """
    Energy with ∫√(P² − U) dx = πħ(n + ½).

    Raises:
        BracketExpansionError: the problem has no bound state at this level
        DegenerateTurningPointError: a double turning point at a trial energy
    """
    return solve_level(problem, QuantizationTarget(mode="two_tp", n=n))


def quantize_mtp(problem: QuantProblem, N: int, mu: int) -> SpectrumEntry:
    """
    Energy with the real-cut sum equal to πħ(N + μ/4) and ν = μ/2 cuts.

    Raises:
        CutCountMismatchError: the solution does not have μ/2 cuts
    """
    return solve_level(problem, QuantizationTarget(mode="multi_tp", N=N, mu=mu))


def spectrum(problem: QuantProblem, n_max: int, workers: int = 1) -> SpectrumResult:
    """
    Levels n = 0..n_max by the two-turning-point rule.

    Levels are independent and may run on a thread pool; results are merged
    in n-order. The first failing level ends the list and is reported in
    `error`.
    """
    if n_max < 0:
        raise ConfigurationError("n_max must be non-negative")

    def attempt(n: int):
        try:
            return quantize_2tp(problem, n)
        except PhaseQuantError as e:
            return e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(attempt, range(n_max + 1)))
    else:
        outcomes = []
        for n in range(n_max + 1):
            outcomes.append(attempt(n))
            if isinstance(outcomes[-1], PhaseQuantError):
                break

    result = SpectrumResult()
    for n, outcome in enumerate(outcomes):
        if isinstance(outcome, PhaseQuantError):
            logger.warning("level %d failed: %s", n, outcome.message)
            result.error = {"level": n, **outcome.to_dict()}
            break
        if result.levels and not outcome.energy > result.levels[-1].energy:
            result.error = {
                "level": n,
                **NumericalFailureError(f"level {n} is not above level {n - 1}").to_dict(),
            }
            break
        result.levels.append(outcome)
    return result
