"""Topological pressure by periodic-orbit sums and cylinder weight matrices."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetError, DomainError, NonFiniteWeight, PowerIterationStall, ThermoError
from .maps import Geometric, MapSpec, Potential
from .symbolic import (
    DEFAULT_CYLINDER_BUDGET,
    PeriodicCache,
    check_budget,
    periodic_birkhoff,
    periodic_table,
    point_values,
)

DEFAULT_SLOPE_GAP_TOL = 0.02
DEFAULT_CONVEXITY_TOL = 1e-9
POWER_TOL = 1e-12
POWER_MAX_ITER = 10**5


@dataclass(frozen=True)
class PeriodicOrbitMethod:
    period: int

    def describe(self) -> str:
        return f"periodic(n={self.period})"


@dataclass(frozen=True)
class CylinderMatrixMethod:
    depth: int

    def describe(self) -> str:
        return f"matrix(k={self.depth})"


Method = PeriodicOrbitMethod | CylinderMatrixMethod


@dataclass(frozen=True)
class Kink:
    location: float
    left_slope: float
    right_slope: float
    gap: float


@dataclass(frozen=True)
class PhaseTransitionReport:
    kinks: tuple[Kink, ...] = ()
    t_plus_estimate: float | None = None


@dataclass
class PressureCurve:
    parameter_name: str
    grid: np.ndarray
    values: np.ndarray
    method: str
    left_slopes: np.ndarray
    right_slopes: np.ndarray
    end_slopes: tuple[float, float]
    transition_report: PhaseTransitionReport = field(default_factory=PhaseTransitionReport)
    evaluator: Callable[[float], float] | None = field(default=None, repr=False, compare=False)

    @property
    def interior(self) -> np.ndarray:
        return self.grid[1:-1]

    def second_differences(self) -> np.ndarray:
        return second_differences(self.grid, self.values)

    def is_convex(self, tol: float = DEFAULT_CONVEXITY_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.values))))
        return bool(np.all(self.second_differences() >= -tol * scale))

    def at(self, t: float) -> float:
        """p(t), recomputed when an evaluator is attached, else interpolated."""
        if self.evaluator is not None:
            return float(self.evaluator(t))
        return float(np.interp(t, self.grid, self.values))


# ------------------------------------------------------------------ numerics


def logsumexp(weights: np.ndarray) -> float:
    """log sum exp(w), summed in descending order with exact rounding."""
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)):
        raise NonFiniteWeight("non-finite Birkhoff sum in a pressure sum")
    top = float(w.max())
    terms = np.sort(np.exp(w - top))[::-1]
    return top + math.log(math.fsum(terms))


def second_differences(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Divided second differences (scaled to the local spacing) at interior points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h_left = x[1:-1] - x[:-2]
    h_right = x[2:] - x[1:-1]
    slope_l = (y[1:-1] - y[:-2]) / h_left
    slope_r = (y[2:] - y[1:-1]) / h_right
    return (slope_r - slope_l) * 0.5 * (h_left + h_right)


def one_sided_derivative(x: Sequence[float], y: Sequence[float], side: str) -> float:
    """Derivative at x[0] (side='right') or x[-1] (side='left') from 3 points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise DomainError("need at least two points for a derivative")
    if x.size == 2:
        return float((y[1] - y[0]) / (x[1] - x[0]))
    if side == "right":
        x0, x1, x2 = x[:3]
        y0, y1, y2 = y[:3]
        at = x0
    else:
        x0, x1, x2 = x[-3:]
        y0, y1, y2 = y[-3:]
        at = x2
    # derivative of the interpolating quadratic
    d0 = (2 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
    d1 = (2 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
    d2 = (2 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
    return float(d0 * y0 + d1 * y1 + d2 * y2)


@dataclass(frozen=True)
class PerronResult:
    log_radius: float
    right: np.ndarray
    left: np.ndarray | None
    iterations: int


def _matvec(W: np.ndarray, v: np.ndarray, m: int, k: int) -> np.ndarray:
    top = m ** (k - 1)
    states = np.arange(W.shape[0])
    targets = (states % top)[:, None] * m + np.arange(m)[None, :]
    return np.einsum("ij,ij->i", W, v[targets])


def _vecmat(W: np.ndarray, u: np.ndarray, m: int, k: int) -> np.ndarray:
    top = m ** (k - 1)
    x = np.arange(W.shape[0])
    sources = np.arange(m)[:, None] * top + (x // m)[None, :]
    return np.einsum("ai,ai->i", u[sources], W[sources, (x % m)[None, :]])


def perron(log_weights: np.ndarray, m: int, k: int, tol: float = POWER_TOL,
           max_iter: int = POWER_MAX_ITER, want_left: bool = False) -> PerronResult:
    """Leading eigenvalue of the depth-k cylinder transition matrix.

    ``log_weights`` has shape (m^k, m): entry [w, b] is the log-weight of the
    transition from word w to the word obtained by dropping w's first symbol
    and appending b.  Iterates until the Collatz-Wielandt bounds
    min(Av/v) <= rho <= max(Av/v) agree to relative ``tol``.
    """
    lw = np.asarray(log_weights, dtype=float)
    if not np.all(np.isfinite(lw)):
        raise NonFiniteWeight("non-finite entry in the weight matrix")
    shift = float(lw.max())
    W = np.exp(np.maximum(lw - shift, -700.0))

    def iterate(step):
        v = np.ones(W.shape[0])
        for it in range(1, max_iter + 1):
            y = step(W, v, m, k)
            ratios = y / v
            lo, hi = float(ratios.min()), float(ratios.max())
            v = y / np.linalg.norm(y)
            if hi - lo <= tol * hi:
                return 0.5 * (lo + hi), v, it
        raise PowerIterationStall(f"power iteration did not converge in {max_iter} steps")

    rho, right, its = iterate(_matvec)
    left = None
    if want_left:
        _, left, its_left = iterate(_vecmat)
        its += its_left
    return PerronResult(shift + math.log(rho), right, left, its)


# ---------------------------------------------------------------- pressure


def pressure_periodic(fmap: MapSpec, phi: Potential, period: int,
                      base_symbol: int | None = None,
                      budget: int = DEFAULT_CYLINDER_BUDGET,
                      cache: PeriodicCache | None = None) -> float:
    """(1/n) log sum over f^n x = x of exp(S_n phi(x)).

    With ``base_symbol`` the sum is restricted to periodic points in that
    first-level cylinder (the Gurevich form); by default every periodic
    point contributes, which on a full shift is the sum of the Gurevich
    sums over all base cylinders.
    """
    if period < 1:
        raise DomainError("period must be >= 1")
    table = periodic_table(fmap, period, budget=budget, cache=cache)
    sums = periodic_birkhoff(fmap, phi, table)
    if base_symbol is not None:
        if not 0 <= base_symbol < fmap.m:
            raise DomainError(f"base symbol {base_symbol} out of range")
        sums = sums[table.first_symbol == base_symbol]
    return logsumexp(sums) / period


def transition_log_weights(fmap: MapSpec, phi: Potential, depth: int,
                           budget: int = DEFAULT_CYLINDER_BUDGET) -> np.ndarray:
    """phi at the representative of each (depth+1)-cylinder, shaped (m^depth, m)."""
    check_budget(fmap.m, depth + 1, budget)
    table = periodic_table(fmap, depth + 1, budget=budget)
    return point_values(fmap, phi, table).reshape(fmap.m ** depth, fmap.m)


def pressure_matrix(fmap: MapSpec, phi: Potential, depth: int,
                    budget: int = DEFAULT_CYLINDER_BUDGET) -> float:
    """log spectral radius of the depth-k cylinder weight matrix."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    return perron(transition_log_weights(fmap, phi, depth, budget), fmap.m, depth).log_radius


def pressure(fmap: MapSpec, phi: Potential, method: Method,
             cache: PeriodicCache | None = None) -> float:
    if isinstance(method, PeriodicOrbitMethod):
        return pressure_periodic(fmap, phi, method.period, cache=cache)
    if isinstance(method, CylinderMatrixMethod):
        return pressure_matrix(fmap, phi, method.depth)
    raise DomainError(f"unknown pressure method {method!r}")


class GridPointError(ThermoError):
    """A pointwise pressure failure, tagged with the offending parameter."""

    def __init__(self, parameter: float, cause: Exception):
        super().__init__(f"pressure failed at parameter {parameter!r}: {cause}")
        self.parameter = parameter
        self.cause = cause


def geometric_family(t: float) -> Potential:
    return Geometric(t)


def pressure_curve(fmap: MapSpec, family: Callable[[float], Potential], grid: Sequence[float],
                   method: Method, parameter_name: str = "t",
                   slope_gap_tol: float = DEFAULT_SLOPE_GAP_TOL,
                   convexity_tol: float = DEFAULT_CONVEXITY_TOL,
                   workers: int = 1, cache: PeriodicCache | None = None) -> PressureCurve:
    """Sample p(s) = P(family(s)) on ``grid`` and report phase transitions."""
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be sorted with at least 3 points")
    if isinstance(method, PeriodicOrbitMethod):
        # warm the periodic table once, outside any worker pool
        periodic_table(fmap, method.period, cache=cache)

    def evaluate(s: float) -> float:
        try:
            return pressure(fmap, family(float(s)), method, cache=cache)
        except ThermoError as exc:
            raise GridPointError(float(s), exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.array(list(pool.map(evaluate, grid)))
    else:
        values = np.array([evaluate(s) for s in grid])
    return curve_from_samples(grid, values, parameter_name=parameter_name,
                              method=method.describe(), evaluator=evaluate,
                              slope_gap_tol=slope_gap_tol, convexity_tol=convexity_tol)


def curve_from_samples(grid: Sequence[float], values: Sequence[float], parameter_name: str = "t",
                       method: str = "samples", evaluator: Callable[[float], float] | None = None,
                       slope_gap_tol: float = DEFAULT_SLOPE_GAP_TOL,
                       convexity_tol: float = DEFAULT_CONVEXITY_TOL) -> PressureCurve:
    """Wrap sampled values (e.g. a synthetic closed form) as a PressureCurve."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteWeight("pressure curve has non-finite values")
    slopes = np.diff(values) / np.diff(grid)
    curve = PressureCurve(
        parameter_name=parameter_name,
        grid=grid,
        values=values,
        method=method,
        left_slopes=slopes[:-1],
        right_slopes=slopes[1:],
        end_slopes=(one_sided_derivative(grid[:3], values[:3], "right"),
                    one_sided_derivative(grid[-3:], values[-3:], "left")),
        evaluator=evaluator,
    )
    if grid.size >= 5:
        curve.transition_report = detect_phase_transitions(curve, slope_gap_tol, convexity_tol)
    return curve


def _refine_location(curve: PressureCurve, loc: float, h: float, rounds: int) -> float:
    f = curve.evaluator
    for _ in range(rounds):
        h *= 0.5
        pts = loc + h * np.arange(-2, 3)
        vals = np.array([f(float(p)) for p in pts])
        gaps = (vals[2:] - 2 * vals[1:-1] + vals[:-2]) / h
        loc = float(pts[1 + int(np.argmax(gaps))])
    return loc


def detect_phase_transitions(curve: PressureCurve, slope_gap_tol: float = DEFAULT_SLOPE_GAP_TOL,
                             convexity_tol: float = DEFAULT_CONVEXITY_TOL,
                             refine_rounds: int = 3) -> PhaseTransitionReport:
    """First-order phase transitions as clusters of large slope gaps.

    Finite-resolution kinks spread over several neighbouring grid points; a
    run of consecutive points whose slope gap exceeds ``slope_gap_tol`` is
    one kink.  Its one-sided slopes come from three-point stencils at the
    grid points just outside the run, and its location is the largest-gap
    point, refined by local grid halving when the curve can be re-evaluated.
    """
    t = curve.grid
    p = curve.values
    if t.size < 5:
        raise DomainError("phase-transition detection needs at least 5 grid points")
    gaps = curve.right_slopes - curve.left_slopes  # interior points 1..N-2
    flagged = gaps > slope_gap_tol
    kinks: list[Kink] = []
    i = 0
    while i < flagged.size:
        if not flagged[i]:
            i += 1
            continue
        j = i
        while j + 1 < flagged.size and flagged[j + 1]:
            j += 1
        first, last = i + 1, j + 1  # grid indices of the run
        left_edge = first - 1
        right_edge = last + 1
        # runs touching the grid edge fall back to the outermost cell slope
        if left_edge >= 1:
            left_slope = one_sided_derivative(t[max(0, left_edge - 2):left_edge + 1],
                                              p[max(0, left_edge - 2):left_edge + 1], "left")
        else:
            left_slope = float(curve.left_slopes[i])
        if right_edge <= t.size - 2:
            right_slope = one_sided_derivative(t[right_edge:right_edge + 3],
                                               p[right_edge:right_edge + 3], "right")
        else:
            right_slope = float(curve.right_slopes[j])
        loc_idx = first + int(np.argmax(gaps[i:j + 1]))
        loc = float(t[loc_idx])
        if curve.evaluator is not None and refine_rounds > 0:
            h = 0.5 * (t[loc_idx + 1] - t[loc_idx - 1])
            loc = _refine_location(curve, loc, h, refine_rounds)
        gap = right_slope - left_slope
        if gap > slope_gap_tol:
            kinks.append(Kink(loc, left_slope, right_slope, gap))
        i = j + 1

    t_plus = None
    tail = second_differences(t, p)
    n_tail = max(3, int(math.ceil(0.2 * t.size)))
    scale = max(1.0, float(np.max(np.abs(p))))
    linear_tail = bool(np.all(np.abs(tail[-n_tail:]) < convexity_tol * scale))
    for k in kinks:
        if k.location > 0 and k.left_slope < 0 and linear_tail:
            t_plus = k.location
            break
    return PhaseTransitionReport(tuple(sorted(kinks, key=lambda k: k.location)), t_plus)


__all__ = [
    "BudgetError",
    "CylinderMatrixMethod",
    "GridPointError",
    "Kink",
    "PeriodicOrbitMethod",
    "PhaseTransitionReport",
    "PressureCurve",
    "curve_from_samples",
    "detect_phase_transitions",
    "geometric_family",
    "logsumexp",
    "one_sided_derivative",
    "perron",
    "pressure",
    "pressure_curve",
    "pressure_matrix",
    "pressure_periodic",
    "second_differences",
]
