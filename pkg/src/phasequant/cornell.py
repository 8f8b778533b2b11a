"""
Relativistic Cornell problem in units ħ = c = 1.

    p²(r) = E²/4 − (m − α̃/r + κr)² − (l+½)²/r²

r²p² is a quartic in r. Its real cuts on the punctured line, together with
the straight segment joining any complex-conjugate pair of turning points,
sum to π(E²/8κ + α̃ − Λ) with Λ = √((l+½)² + α̃²): half of the contour value
I₀ + I∞ = −2πΛ + 2π(E²/8κ + α̃).
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    BracketExpansionError,
    CutCountMismatchError,
    DomainViolationError,
    NoCutsError,
    NumericalFailureError,
    UnphysicalLevelError,
)
from .numerics import bracket_roots, gauss_legendre, integrate_sqrt_cut, refine_root, scalarize
from .problem import Potential, QuantProblem, Tolerances

logger = logging.getLogger(__name__)

SCAN_SAMPLES = 4096
RESCAN_FACTORS = (1, 4, 16)
SEGMENT_MIN_ORDER = 16
SEGMENT_MAX_ORDER = 4096
NEWTON_STEPS = 4
THRESHOLD_GRID = 4001
MAX_BRACKET_STEPS = 60
# Sweep energies sit this far above the threshold
SWEEP_ENERGY_FACTOR = 1.2


def alpha_tilde_from_alpha_s(alpha_s: float) -> float:
    """α̃ = (4/3)·α_s."""
    if alpha_s < 0:
        raise ValueError("alpha_s must be non-negative")
    return 4.0 * alpha_s / 3.0


class CornellParams(BaseModel):
    """Quark mass m (GeV), α̃, string tension κ (GeV²) and orbital l."""

    model_config = ConfigDict(frozen=True)

    m: float = Field(default=0.0, ge=0, description="Quark mass")
    alpha_tilde: float = Field(..., ge=0, description="(4/3)·alpha_s")
    kappa: float = Field(..., gt=0, description="String tension")
    l: int = Field(default=0, ge=0, description="Orbital angular momentum")

    @classmethod
    def from_alpha_s(cls, alpha_s: float, kappa: float, m: float = 0.0, l: int = 0) -> "CornellParams":
        return cls(m=m, alpha_tilde=alpha_tilde_from_alpha_s(alpha_s), kappa=kappa, l=l)

    @property
    def langer(self) -> float:
        return self.l + 0.5

    @property
    def Lambda(self) -> float:
        """Λ = √((l+½)² + α̃²)."""
        return math.hypot(self.langer, self.alpha_tilde)

    def with_l(self, l: int) -> "CornellParams":
        return self.model_copy(update={"l": l})


class CornellLevel(BaseModel):
    n_r: int = Field(..., ge=0)
    l: int = Field(default=0, ge=0)
    E_squared: float
    E: float = 0.0

    @model_validator(mode="after")
    def compute_energy(self) -> "CornellLevel":
        if not self.E_squared > 0:
            raise ValueError("E_squared must be positive")
        self.E = math.sqrt(self.E_squared)
        return self


class CornellCutSum(BaseModel):
    """Per-cut contributions to the real-cut sum at one energy."""

    energy: float
    positive: Tuple[float, ...] = Field(default=(), description="Real cuts at r > 0")
    negative: Tuple[float, ...] = Field(default=(), description="Real cuts at r < 0")
    complex_pairs: Tuple[float, ...] = Field(default=(), description="Segments between conjugate turning points")
    pair_centers: Tuple[float, ...] = Field(default=(), description="Re z of each conjugate pair")

    @property
    def total(self) -> float:
        return math.fsum(self.positive + self.negative + self.complex_pairs)

    @property
    def positive_terms(self) -> int:
        """Real cuts at r > 0 plus conjugate pairs standing in for one."""
        return len(self.positive) + sum(1 for c in self.pair_centers if c > 0)


class ContourTerms(BaseModel):
    """Residue terms of the contour integral and the numeric value they should match."""

    energy: float
    I_0: float
    I_infinity: float
    analytic: float
    contour: float
    residual: float


class ReggeRow(BaseModel):
    n_r: int
    l: int
    E_squared: float
    M_squared: Optional[float] = None
    linear_rescaled: float = Field(..., description="8κ(2n_r + l + 3/2)")
    interference: float = Field(..., description="Coulomb–linear shift −8κα̃")


class IdentitySample(BaseModel):
    params: CornellParams
    energy: float
    cut_sum: float
    analytic: float
    residual: float
    tolerance: float


def cornell_p_squared(params: CornellParams, E: float, r: float) -> float:
    """p²(r) for r > 0."""
    if not r > 0:
        raise DomainViolationError(f"the Cornell radial momentum needs r > 0, got r={r!r}", {"point": r})
    return _p_squared(params, E, r)


def _p_squared(params: CornellParams, E, r):
    """p² continued to any r ≠ 0; works on arrays."""
    return E * E / 4.0 - (params.m - params.alpha_tilde / r + params.kappa * r) ** 2 - params.langer**2 / (r * r)


def cornell_quartic(params: CornellParams, E: float) -> Tuple[float, float, float, float, float]:
    """Coefficients of r²p²(r), highest power first."""
    m, a, k = params.m, params.alpha_tilde, params.kappa
    return (
        -k * k,
        -2.0 * m * k,
        E * E / 4.0 - m * m + 2.0 * a * k,
        2.0 * m * a,
        -(a * a + params.langer**2),
    )


def cornell_spectrum_closed_form(params: CornellParams, n_r: int) -> CornellLevel:
    """E² = 8κ[2(n_r+½) + Λ − α̃]."""
    if n_r < 0:
        raise ValueError("n_r must be non-negative")
    e_squared = 8.0 * params.kappa * (2.0 * (n_r + 0.5) + params.Lambda - params.alpha_tilde)
    if not e_squared > 0:
        raise UnphysicalLevelError(f"closed form gives E^2={e_squared!r} <= 0 at n_r={n_r}", {"E_squared": e_squared})
    return CornellLevel(n_r=n_r, l=params.l, E_squared=e_squared)


def _cauchy_radius(coeffs: Sequence[float]) -> float:
    return 1.0 + max(abs(c / coeffs[0]) for c in coeffs[1:])


def _real_roots(coeffs: Sequence[float], samples: int) -> List[float]:
    def quartic(rs):
        return np.polyval(coeffs, rs)

    radius = _cauchy_radius(coeffs)
    f = scalarize(quartic)
    return [refine_root(f, b, 1e-13) for b in bracket_roots(quartic, (-radius, radius), samples)]


def _polish(coeffs: Sequence[float], z: complex) -> complex:
    derivative = np.polyder(coeffs)
    for _ in range(NEWTON_STEPS):
        slope = np.polyval(derivative, z)
        if slope == 0:
            break
        z = z - np.polyval(coeffs, z) / slope
    return complex(z)


def _turning_points(params: CornellParams, E: float) -> Tuple[List[float], List[complex]]:
    """Real roots of r²p² (scanned and refined) and the upper members of complex pairs."""
    coeffs = cornell_quartic(params, E)
    approximate = np.roots(coeffs)
    scale = np.maximum(1.0, np.abs(approximate))
    expected_real = int(np.sum(np.abs(approximate.imag) <= 1e-9 * scale))
    for factor in RESCAN_FACTORS:
        real = _real_roots(coeffs, factor * SCAN_SAMPLES)
        if len(real) % 2 == 0 and len(real) >= expected_real:
            break
        logger.debug("found %d real turning points, expected %d; rescanning", len(real), expected_real)
    else:
        if len(real) % 2:
            raise NumericalFailureError(
                f"could not resolve the real turning points of the Cornell quartic at E={E!r}",
                {"found": len(real), "expected": expected_real},
            )
        logger.warning(
            "resolved %d of %d real turning points at E=%r; ignoring unresolved narrow cuts",
            len(real), expected_real, E,
        )
    pairs = (4 - len(real)) // 2
    upper = sorted((z for z in approximate if z.imag > 0), key=lambda z: -z.imag)[:pairs]
    return real, [_polish(coeffs, z) for z in upper]


def _continued_sqrt(values: np.ndarray, theta: np.ndarray, anchor: complex) -> np.ndarray:
    """√values continued along θ, starting from the principal root of `anchor` at θ = 0."""
    out = np.sqrt(values.astype(complex))
    start = np.sqrt(complex(anchor))
    positive = np.flatnonzero(theta >= 0)
    negative = np.flatnonzero(theta < 0)[::-1]
    for side in (positive, negative):
        previous = start
        for i in side:
            if abs(out[i] + previous) < abs(out[i] - previous):
                out[i] = -out[i]
            previous = out[i]
    return out


def _pair_segment(params: CornellParams, z: complex, others: Sequence[float], rel_tol: float) -> float:
    """
    ∫ p dr along the straight segment from z̄ to z, taken with the sign that
    continues a real cut whose endpoints have merged and split off the axis.

    With p² = (r−z)(r−z̄)·S(r) and r = a + ib·sinθ this is
    −b² ∫ cos²θ Re√(−S) dθ over (−π/2, π/2).
    """
    a, b = z.real, abs(z.imag)
    r3, r4 = others
    k2 = params.kappa**2
    anchor = k2 * (a - r3) * (a - r4) / (a * a)
    previous = None
    order = SEGMENT_MIN_ORDER
    while order <= SEGMENT_MAX_ORDER:
        t, w = gauss_legendre(order)
        theta = 0.5 * math.pi * t
        r = a + 1j * b * np.sin(theta)
        minus_s = k2 * (r - r3) * (r - r4) / (r * r)
        root = _continued_sqrt(minus_s, theta, anchor)
        value = -b * b * 0.5 * math.pi * float(np.dot(w, np.cos(theta) ** 2 * root.real))
        if previous is not None and abs(value - previous) <= rel_tol * max(abs(value), 1e-300):
            return value
        previous = value
        order *= 2
    raise NumericalFailureError(f"segment integral between conjugate turning points {z!r} did not converge")


def cornell_cut_sum(params: CornellParams, E: float, rel_tol: float = 1e-10) -> CornellCutSum:
    """
    Real-cut sum of ∫√p² over the punctured line at energy E.

    A side of r = 0 whose turning points have left the real axis contributes
    its conjugate-pair segment instead, so the sum continues below the
    threshold of that side.

    Raises:
        NoCutsError: no real cut on either side of r = 0
    """
    real, upper = _turning_points(params, E)
    coeffs = cornell_quartic(params, E)

    def g(rs):
        return np.polyval(coeffs, rs) / (rs * rs)

    positive, negative = [], []
    for a, b in zip(real, real[1:]):
        if not np.polyval(coeffs, 0.5 * (a + b)) > 0:
            continue
        value = integrate_sqrt_cut(g, a, b, rel_tol)
        (positive if a > 0 else negative).append(value)
    if not (positive or negative):
        raise NoCutsError(f"no classically allowed region for E={E!r}", {"energy": E})

    segments = []
    for z in upper:
        segments.append(_pair_segment(params, z, real[:2], rel_tol))
    logger.debug("cut sum at E=%r: +%s -%s pairs %s", E, positive, negative, segments)
    return CornellCutSum(
        energy=E, positive=tuple(positive), negative=tuple(negative), complex_pairs=tuple(segments),
        pair_centers=tuple(z.real for z in upper),
    )


def _analytic_half_contour(params: CornellParams, E: float) -> float:
    return math.pi * (E * E / (8.0 * params.kappa) + params.alpha_tilde - params.Lambda)


def contour_terms(params: CornellParams, E: float) -> ContourTerms:
    """I₀ = −2πΛ, I∞ = 2π(E²/8κ + α̃) and the numeric contour value 2·(cut sum)."""
    cut_sum = cornell_cut_sum(params, E).total
    i_0 = -2.0 * math.pi * params.Lambda
    i_inf = 2.0 * math.pi * (E * E / (8.0 * params.kappa) + params.alpha_tilde)
    contour = 2.0 * cut_sum
    return ContourTerms(
        energy=E, I_0=i_0, I_infinity=i_inf, analytic=i_0 + i_inf, contour=contour,
        residual=abs(contour - (i_0 + i_inf)),
    )


def contour_identity_residual(params: CornellParams, E: float) -> float:
    """|Σ_cuts ∫√p² dr − π(E²/8κ + α̃ − Λ)|."""
    return abs(cornell_cut_sum(params, E).total - _analytic_half_contour(params, E))


def cornell_threshold(params: CornellParams, side: int = 1) -> float:
    """
    Lowest E with a real cut on one side of r = 0:
    2·√(min over side·r > 0 of (m − α̃/r + κr)² + (l+½)²/r²).
    """
    if side not in (1, -1):
        raise ValueError("side must be 1 or -1")

    def barrier(s: float) -> float:
        r = side * s
        return (params.m - params.alpha_tilde / r + params.kappa * r) ** 2 + params.langer**2 / (r * r)

    ss = np.logspace(-6, 6, THRESHOLD_GRID)
    values = barrier(ss)
    i = int(np.argmin(values))
    lo, hi = ss[max(i - 1, 0)], ss[min(i + 1, THRESHOLD_GRID - 1)]
    best = float(values[i])
    result = minimize_scalar(barrier, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
    if result.success:
        best = min(best, float(result.fun))
    return 2.0 * math.sqrt(best)


def cornell_quantize_numeric(params: CornellParams, n_r: int) -> CornellLevel:
    """
    E² with cut sum = 2π(n_r + ½), by a bracketed root search in E².

    The search starts at the lower of the two side thresholds; a level below
    the r > 0 threshold is carried by the conjugate pair on that side.

    Raises:
        BracketExpansionError: the level lies below every real cut or cannot be bracketed
        CutCountMismatchError: the r > 0 side is not one cut (or one pair) at the solution
    """
    target = 2.0 * math.pi * (n_r + 0.5)

    def mismatch(e_squared: float) -> float:
        return cornell_cut_sum(params, math.sqrt(e_squared)).total - target

    floor = min(cornell_threshold(params, 1), cornell_threshold(params, -1)) ** 2
    offset = 1e-6
    for _ in range(MAX_BRACKET_STEPS):
        try:
            f_lo = mismatch(floor * (1.0 + offset))
            break
        except NoCutsError:
            offset *= 10.0
    else:
        raise BracketExpansionError(f"no bound states: no real cut above E^2={floor!r}")
    lo = floor * (1.0 + offset)
    if f_lo > 0:
        raise BracketExpansionError(
            f"no bound states: level n_r={n_r} lies below the first real cut at E^2={lo!r}",
            {"n_r": n_r},
        )

    step = 8.0 * params.kappa * (2.0 * n_r + 2.0)
    hi = lo + step
    for _ in range(MAX_BRACKET_STEPS):
        if mismatch(hi) > 0:
            break
        lo, step = hi, 2.0 * step
        hi = lo + step
    else:
        raise BracketExpansionError(f"no bound states: could not bracket n_r={n_r}", {"n_r": n_r})

    e_squared, info = brentq(mismatch, lo, hi, xtol=1e-14 * hi, rtol=1e-13, full_output=True, disp=False)
    if not info.converged:
        raise NumericalFailureError(f"Cornell energy search did not converge for n_r={n_r}")
    terms = cornell_cut_sum(params, math.sqrt(e_squared)).positive_terms
    if terms != 1:
        raise CutCountMismatchError(
            f"Cornell level n_r={n_r} has {terms} cuts or pairs at r > 0", found=terms, expected=1
        )
    logger.debug("Cornell n_r=%d l=%d: E^2=%.15g", n_r, params.l, e_squared)
    return CornellLevel(n_r=n_r, l=params.l, E_squared=float(e_squared))


def cornell_problem(params: CornellParams, tolerances: Optional[Tolerances] = None) -> QuantProblem:
    """
    The four-turning-point problem on the punctured line: mass ½ and ħ = 1
    make P² = E²/4, so a quantized energy ε corresponds to E² = 4ε.
    """
    potential = Potential.relativistic_cornell(params.m, params.alpha_tilde, params.kappa)
    return QuantProblem(
        potential=potential, mass=0.5, hbar=1.0, angular=params.l,
        tolerances=tolerances or Tolerances(),
    )


def regge_table(
    params: CornellParams, n_r_max: int, l_max: int, shift_c: Optional[float] = None
) -> List[ReggeRow]:
    """Closed-form E² on the (n_r, l) grid, with the optional M² = E² − C² column."""
    rows = []
    for l in range(l_max + 1):
        at_l = params.with_l(l)
        for n_r in range(n_r_max + 1):
            level = cornell_spectrum_closed_form(at_l, n_r)
            rows.append(ReggeRow(
                n_r=n_r,
                l=l,
                E_squared=level.E_squared,
                M_squared=None if shift_c is None else level.E_squared - shift_c**2,
                linear_rescaled=8.0 * params.kappa * (2 * n_r + l + 1.5),
                interference=-8.0 * params.kappa * params.alpha_tilde,
            ))
    return rows


def identity_sample(params: CornellParams, E: Optional[float] = None) -> IdentitySample:
    """Contour-identity check at E (default 1.2× threshold)."""
    energy = SWEEP_ENERGY_FACTOR * cornell_threshold(params) if E is None else E
    cut_sum = cornell_cut_sum(params, energy).total
    analytic = _analytic_half_contour(params, energy)
    return IdentitySample(
        params=params, energy=energy, cut_sum=cut_sum, analytic=analytic,
        residual=abs(cut_sum - analytic), tolerance=1e-6 * max(1.0, abs(analytic)),
    )


def random_params(rng: np.random.Generator) -> CornellParams:
    return CornellParams(
        m=float(rng.uniform(0.0, 1.0)),
        alpha_tilde=float(rng.uniform(0.0, 1.0)),
        kappa=float(rng.uniform(0.1, 0.5)),
        l=int(rng.integers(0, 4)),
    )


def identity_sweep(sweeps: int, seed: int, workers: int = 1) -> List[IdentitySample]:
    """Contour identity at `sweeps` random parameter sets drawn from a seeded generator."""
    rng = np.random.default_rng(seed)
    draws = [random_params(rng) for _ in range(sweeps)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(identity_sample, draws))
    return [identity_sample(p) for p in draws]
