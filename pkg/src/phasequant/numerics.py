"""
Root bracketing/refinement and quadrature kernels shared by every higher module.

Square-root integrands that vanish at simple turning points are integrated
after the substitution x = c + h·sinθ, which turns the endpoint behaviour
(x − a)^(1/2) into an analytic function of θ so Gauss–Legendre converges
exponentially.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .errors import (
    DegenerateTurningPointError,
    DomainViolationError,
    InvalidCutError,
    NumericalFailureError,
)

logger = logging.getLogger(__name__)

MAX_ROOT_ITERATIONS = 200
MIN_QUADRATURE_ORDER = 16
MAX_QUADRATURE_ORDER = 4096
# Interior negativity of g tolerated as roundoff, relative to max|g| on the nodes
NEGATIVE_TOLERANCE = 1e-9
# |f(x*)| above this fraction of the bracket's end values means the sign change was not a simple zero
DEGENERATE_RESIDUAL = 1e-6

ScalarFunction = Callable[[float], float]
ArrayFunction = Callable[[NDArray[np.float64]], NDArray[np.float64]]


@dataclass(frozen=True)
class Bracket:
    """Interval [lo, hi] over which f changes sign (or vanishes at an end)."""
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if np.sign(self.f_lo) * np.sign(self.f_hi) > 0:
            raise ValueError(f"f does not change sign on [{self.lo}, {self.hi}]")


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Nodes and weights on [-1, 1]; cached and marked read-only."""
    nodes, weights = roots_legendre(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def sample(f: Callable, xs: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Evaluate f on an array.

    Vectorized callables are called once; scalar callables point by point,
    with domain violations turned into NaN.
    """
    try:
        ys = np.asarray(f(xs), dtype=np.float64)
        if ys.shape == xs.shape:
            return ys
    except (TypeError, ValueError, DomainViolationError):
        pass
    out = np.empty_like(xs)
    for i, x in enumerate(xs.tolist()):
        try:
            out[i] = f(x)
        except (DomainViolationError, ZeroDivisionError, ValueError, OverflowError):
            out[i] = np.nan
    return out


def scalarize(f: ArrayFunction) -> ScalarFunction:
    """Wrap a vectorized function so it can be called with a single float."""
    def scalar(x: float) -> float:
        return float(f(np.array([x], dtype=np.float64))[0])
    return scalar


def bracket_roots(f: Callable, window: Tuple[float, float], samples: int) -> List[Bracket]:
    """
    Scan a window for sign changes.

    Args:
        f: Function to scan (vectorized or scalar)
        window: (lo, hi) scan interval
        samples: Number of uniformly spaced sample points, at least 2

    Returns:
        Disjoint brackets ordered left to right; empty when f never changes sign.
        Non-finite samples are skipped and never bracketed across.
    """
    if samples < 2:
        raise ValueError("bracket_roots needs at least 2 samples")
    lo, hi = window
    xs = np.linspace(lo, hi, samples)
    ys = sample(f, xs)
    finite = np.isfinite(ys)
    skipped = int(samples - finite.sum())
    if skipped:
        logger.warning("skipped %d non-finite samples of %d on [%g, %g]", skipped, samples, lo, hi)

    sign = np.sign(np.where(finite, ys, 0.0))
    left, right = sign[:-1], sign[1:]
    usable = finite[:-1] & finite[1:]
    crossing = usable & ((left * right < 0) | ((right == 0) & (left != 0)))
    # a zero on the first sample has no left neighbour to pair with
    if usable[0] and left[0] == 0 and right[0] != 0:
        crossing[0] = True

    brackets = [
        Bracket(lo=float(xs[i]), hi=float(xs[i + 1]), f_lo=float(ys[i]), f_hi=float(ys[i + 1]))
        for i in np.flatnonzero(crossing)
    ]
    logger.debug("found %d sign changes on [%g, %g] with %d samples", len(brackets), lo, hi, samples)
    return brackets


def refine_root(f: ScalarFunction, bracket: Bracket, rel_tol: float = 1e-12) -> float:
    """
    Refine a bracketed root with Brent's method.

    The returned x* is within rel_tol·max(1, |x*|) of the root.

    Raises:
        NumericalFailureError: no convergence within 200 iterations
        DegenerateTurningPointError: the sign change is not a simple zero
    """
    if bracket.f_lo == 0:
        return bracket.lo
    if bracket.f_hi == 0:
        return bracket.hi
    rtol = max(0.5 * rel_tol, 4 * np.finfo(float).eps)
    try:
        root, info = brentq(
            f, bracket.lo, bracket.hi,
            xtol=0.5 * rel_tol, rtol=rtol, maxiter=MAX_ROOT_ITERATIONS,
            full_output=True, disp=False,
        )
    except (RuntimeError, ValueError) as e:
        raise NumericalFailureError(
            f"root refinement failed on [{bracket.lo}, {bracket.hi}]: {str(e)}"
        )
    if not info.converged:
        raise NumericalFailureError(
            f"root refinement did not converge on [{bracket.lo}, {bracket.hi}] "
            f"after {info.iterations} iterations",
            {"iterations": info.iterations},
        )
    residual = abs(f(root))
    scale = max(abs(bracket.f_lo), abs(bracket.f_hi))
    if not residual <= DEGENERATE_RESIDUAL * scale:
        raise DegenerateTurningPointError(
            f"sign change at x={root!r} is not a simple zero (|f|={residual:.3e})",
            {"point": root},
        )
    return float(root)


def _sqrt_clipped(g: Callable, xs: NDArray[np.float64]) -> NDArray[np.float64]:
    gv = sample(g, xs)
    if not np.all(np.isfinite(gv)):
        bad = xs[~np.isfinite(gv)]
        raise InvalidCutError(
            f"integrand is not finite at {bad.size} quadrature nodes (first at x={float(bad[0])!r})"
        )
    floor = -NEGATIVE_TOLERANCE * float(np.max(np.abs(gv))) if gv.size else 0.0
    if gv.size and float(gv.min()) < floor:
        at = float(xs[int(np.argmin(gv))])
        raise InvalidCutError(
            f"integrand is negative inside the cut (g={float(gv.min()):.3e} at x={at!r})",
            {"point": at},
        )
    return np.sqrt(np.maximum(gv, 0.0))


def _sqrt_rule(g: Callable, center: float, half: float, order: int) -> float:
    t, w = gauss_legendre(order)
    theta = 0.5 * math.pi * t
    xs = center + half * np.sin(theta)
    return 0.5 * math.pi * half * float(np.dot(w, np.cos(theta) * _sqrt_clipped(g, xs)))


def integrate_sqrt_cut(g: Callable, a: float, b: float, rel_tol: float = 1e-10) -> float:
    """
    ∫ₐᵇ √g dx for g ≥ 0 on (a, b) with simple zeros at the ends.

    Gauss–Legendre after x = (a+b)/2 + ((b−a)/2)·sinθ, doubling the order
    from 16 until two successive orders agree within rel_tol (max 4096).

    Raises:
        InvalidCutError: g is negative in the interior beyond roundoff
        NumericalFailureError: no convergence at the maximum order
    """
    if a == b:
        return 0.0
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    previous = None
    order = MIN_QUADRATURE_ORDER
    while order <= MAX_QUADRATURE_ORDER:
        value = _sqrt_rule(g, center, half, order)
        if previous is not None and abs(value - previous) <= rel_tol * abs(value):
            return value
        previous = value
        order *= 2
    raise NumericalFailureError(
        f"quadrature on [{a}, {b}] did not converge to {rel_tol:g} by order {MAX_QUADRATURE_ORDER}",
        {"last_change": abs(value - previous) if previous is not None else None},
    )


def panel_quadrature(
    f: ArrayFunction, lefts: ArrayLike, rights: ArrayLike, order: int = 16
) -> NDArray[np.float64]:
    """
    Fixed-order sin-substituted Gauss–Legendre on many panels at once.

    Returns the integral of f over each [left, right]; suitable for integrands
    with square-root behaviour at panel ends.
    """
    lefts = np.asarray(lefts, dtype=np.float64)
    rights = np.asarray(rights, dtype=np.float64)
    t, w = gauss_legendre(order)
    theta = 0.5 * math.pi * t
    center = 0.5 * (lefts + rights)[:, None]
    half = 0.5 * (rights - lefts)[:, None]
    xs = center + half * np.sin(theta)[None, :]
    values = f(xs.ravel()).reshape(xs.shape)
    return 0.5 * math.pi * half[:, 0] * ((values * np.cos(theta)[None, :]) @ w)


def integrate_sqrt_panels(
    g: ArrayFunction, lefts: ArrayLike, rights: ArrayLike, order: int = 16
) -> NDArray[np.float64]:
    """Per-panel ∫√g with g clipped at zero; used for cumulative phase tables."""
    def integrand(xs: NDArray[np.float64]) -> NDArray[np.float64]:
        gv = np.nan_to_num(g(xs), nan=0.0, posinf=1e300, neginf=0.0)
        return np.sqrt(np.maximum(gv, 0.0))
    return panel_quadrature(integrand, lefts, rights, order)
