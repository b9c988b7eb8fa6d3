"""Legendre transforms: Lyapunov spectrum, temperature function, dimension spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BracketError, DomainError, NotApplicable, NotNormalized, ThermoError
from .maps import Combined, MapSpec, Potential
from .pressure import (
    CylinderMatrixMethod,
    Method,
    PeriodicOrbitMethod,
    PressureCurve,
    one_sided_derivative,
    pressure,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ARG_TOL = 1e-10
LAMBDA_FLOOR = 1e-6
DERIV_STEP = 1e-4
NORMALIZATION_TOL = 1e-6
ROOT_TOL = 1e-13
SCAN_STEP = 0.25
BRACKET_LIMIT = 64.0
FLAT_SLOPE = -1e-3
LINEARITY_TOL = 1e-6
INFINITE = math.inf


def golden_section_min(f: Callable[[float], float], a: float, b: float,
                       tol: float = ARG_TOL) -> tuple[float, float]:
    """Minimise a unimodal f on [a, b]; returns (argmin, min)."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    candidates = [(f(x), x), (fc, c), (fd, d)]
    fx, x = min(candidates)
    return x, fx


def _grid_inf(grid: np.ndarray, values: np.ndarray, objective: Callable[[float], float] | None,
              tol: float) -> tuple[float, float, bool]:
    """inf of a convex sampled objective with refinement in the bracketing cell."""
    i = int(np.argmin(values))
    attained = 0 < i < grid.size - 1
    if objective is None or not attained:
        return float(grid[i]), float(values[i]), attained
    x, fx = golden_section_min(objective, float(grid[i - 1]), float(grid[i + 1]), tol)
    if fx > values[i]:
        return float(grid[i]), float(values[i]), attained
    return x, fx, attained


# ------------------------------------------------------------------ Lyapunov


@dataclass(frozen=True)
class LegendreValue:
    value: float
    t_star: float
    attained: bool
    degenerate: bool = False


@dataclass(frozen=True)
class SpectrumDomain:
    lower: float
    upper: float
    lower_verified: bool = True
    unverified_interval: tuple[float, float] | None = None


@dataclass
class SpectrumCurve:
    kind: str
    abscissa_grid: np.ndarray
    values: np.ndarray
    domain: SpectrumDomain
    argmins: np.ndarray
    attained: np.ndarray
    lower_verified: np.ndarray

    def second_differences(self) -> np.ndarray:
        x, y = self.abscissa_grid, self.values
        if x.size < 3:
            return np.zeros(0)
        hl = x[1:-1] - x[:-2]
        hr = x[2:] - x[1:-1]
        return ((y[2:] - y[1:-1]) / hr - (y[1:-1] - y[:-2]) / hl) * 0.5 * (hl + hr)


def exponent_range(p_curve: PressureCurve) -> tuple[float, float]:
    """[lambda_inf, lambda_sup] estimated from the curve's end slopes."""
    lo = -p_curve.end_slopes[1]
    hi = -p_curve.end_slopes[0]
    return min(lo, hi), max(lo, hi)


def pressure_derivative(p_curve: PressureCurve, t: float, h: float = DERIV_STEP) -> float:
    """Central difference Dp(t), through the evaluator when one is attached."""
    return (p_curve.at(t + h) - p_curve.at(t - h)) / (2.0 * h)


def legendre_lyapunov(p_curve: PressureCurve, lam: float, lambda_floor: float = LAMBDA_FLOOR,
                      tol: float = ARG_TOL) -> LegendreValue:
    """L(lambda) = (1/lambda) inf_t (p(t) + t lambda)."""
    if lam < lambda_floor:
        raise DomainError(f"lambda={lam} below the floor {lambda_floor}")
    lo, hi = exponent_range(p_curve)
    slack = 1e-9 * max(1.0, abs(hi))
    if not lo - slack <= lam <= hi + slack:
        raise DomainError(f"lambda={lam} outside the exponent range [{lo:.6g}, {hi:.6g}]")
    grid = p_curve.grid
    obj_vals = p_curve.values + grid * lam
    scale = max(1.0, float(np.max(np.abs(obj_vals))))
    if float(obj_vals.max() - obj_vals.min()) <= 1e-12 * scale:
        # affine pressure: every t is a minimiser
        return LegendreValue(float(obj_vals.mean()) / lam, float(grid[grid.size // 2]), True, True)
    objective = None
    if p_curve.evaluator is not None:
        objective = lambda t: p_curve.at(t) + t * lam  # noqa: E731
    t_star, fmin, attained = _grid_inf(grid, obj_vals, objective, tol)
    return LegendreValue(fmin / lam, t_star, attained)


def lyapunov_spectrum(p_curve: PressureCurve, lambda_grid: Sequence[float],
                      lambda_floor: float = LAMBDA_FLOOR) -> SpectrumCurve:
    lam = np.asarray(lambda_grid, dtype=float)
    res = [legendre_lyapunov(p_curve, float(x), lambda_floor) for x in lam]
    lo, hi = exponent_range(p_curve)
    verified = np.ones(lam.size, dtype=bool)
    unverified = None
    report = p_curve.transition_report
    if report.t_plus_estimate is not None and report.t_plus_estimate > 1.0:
        kink = next(k for k in report.kinks if k.location == report.t_plus_estimate)
        unverified = (lo, -kink.left_slope)
        verified = ~((lam >= unverified[0]) & (lam < unverified[1]))
    domain = SpectrumDomain(max(lo, lambda_floor), hi, bool(verified.all()), unverified)
    return SpectrumCurve(
        kind="Lyapunov",
        abscissa_grid=lam,
        values=np.array([r.value for r in res]),
        domain=domain,
        argmins=np.array([r.t_star for r in res]),
        attained=np.array([r.attained for r in res]),
        lower_verified=verified,
    )


# --------------------------------------------------------------- temperature


def default_method(fmap: MapSpec, phi: Potential) -> Method:
    if Combined(1.0, 1.0, phi).is_locally_constant(fmap):
        return CylinderMatrixMethod(1)
    return PeriodicOrbitMethod(12)


def temperature(fmap: MapSpec, phi: Potential, q: float,
                bracket: tuple[float, float] = (-2.0, 2.0), method: Method | None = None,
                zero_tol: float = 1e-9, check_normalized: bool = True) -> float:
    """T(q) = inf{t : P(-t log|Df| + q phi) = 0}; math.inf marks an infinite phase.

    The bracket is expanded geometrically up to |t| <= 64.  A 0.25-step scan
    locates the leftmost cell where the pressure stops being positive, and
    bisection refines it.  When the pressure stays positive but flattens
    out at the right end of the bracket, the temperature is infinite.
    """
    method = default_method(fmap, phi) if method is None else method
    if check_normalized:
        p0 = pressure(fmap, phi, method)
        if abs(p0) > NORMALIZATION_TOL:
            raise NotNormalized(f"P(phi) = {p0:.3g}, expected 0")

    def F(t):
        return pressure(fmap, Combined(t, q, phi), method)

    lo, hi = map(float, bracket)
    if lo >= hi:
        raise DomainError("bracket must satisfy t_lo < t_hi")
    while F(lo) <= zero_tol:
        if lo <= -BRACKET_LIMIT:
            raise BracketError(f"pressure is not positive anywhere down to t={lo}")
        lo = max(2.0 * lo if lo < 0 else lo - 1.0, -BRACKET_LIMIT)
    while F(hi) > zero_tol:
        if hi >= BRACKET_LIMIT:
            slope = F(hi) - F(hi - 1.0)
            if slope >= FLAT_SLOPE:
                return INFINITE
            raise BracketError(f"pressure still positive at t={hi}")
        hi = min(2.0 * hi if hi > 0 else hi + 1.0, BRACKET_LIMIT)

    n = max(2, int(math.ceil((hi - lo) / SCAN_STEP)) + 1)
    grid = np.linspace(lo, hi, n)
    vals = np.array([F(t) for t in grid])
    signs = np.where(vals > zero_tol, 1, np.where(vals < -zero_tol, -1, 0))
    strict = signs[signs != 0]
    if np.count_nonzero(np.diff(strict)) > 1:
        raise BracketError(f"pressure changes sign more than once on [{lo}, {hi}] (q={q})")
    j = int(np.argmax(signs <= 0))  # first non-positive point; j >= 1 since F(lo) > 0
    a, b = float(grid[j - 1]), float(grid[j])
    while b - a > ROOT_TOL * max(1.0, abs(a)):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if F(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


@dataclass
class TemperatureCurve:
    q_grid: np.ndarray
    T_values: np.ndarray
    derivative_estimates: np.ndarray
    q_minus: float | None = None
    q_plus: float | None = None
    infinite_transition_at_zero: bool = False
    strictly_convex: bool = True
    evaluator: Callable[[float], float] | None = field(default=None, repr=False, compare=False)

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.T_values)

    @property
    def is_infinite(self) -> np.ndarray:
        return ~self.finite

    def at(self, q: float) -> float:
        if self.evaluator is not None:
            return float(self.evaluator(q))
        f = self.finite
        return float(np.interp(q, self.q_grid[f], self.T_values[f]))

    def derivative(self, q: float, h: float = DERIV_STEP) -> float:
        if self.evaluator is not None:
            return (self.at(q + h) - self.at(q - h)) / (2.0 * h)
        f = self.finite
        return float(np.interp(q, self.q_grid[f], self.derivative_estimates[f]))

    def second_differences(self) -> np.ndarray:
        f = self.finite
        x, y = self.q_grid[f], self.T_values[f]
        if x.size < 3:
            return np.zeros(0)
        hl = x[1:-1] - x[:-2]
        hr = x[2:] - x[1:-1]
        return ((y[2:] - y[1:-1]) / hr - (y[1:-1] - y[:-2]) / hl) * 0.5 * (hl + hr)


def _grid_derivatives(q: np.ndarray, T: np.ndarray) -> np.ndarray:
    out = np.full(q.size, np.nan)
    f = np.isfinite(T)
    idx = np.nonzero(f)[0]
    if idx.size < 2:
        return out
    qs, ts = q[idx], T[idx]
    d = np.gradient(ts, qs)
    if idx.size >= 3:
        d[0] = one_sided_derivative(qs[:3], ts[:3], "right")
        d[-1] = one_sided_derivative(qs[-3:], ts[-3:], "left")
    out[idx] = d
    return out


def _linear_tails(q: np.ndarray, sd: np.ndarray) -> tuple[float | None, float | None, bool]:
    """Ends of linear runs (>= 3 cells) anchored at either end of the grid."""
    linear = sd < LINEARITY_TOL
    if sd.size == 0:
        return None, None, True
    if np.all(linear):
        return None, None, False
    q_minus = q_plus = None
    run = 0
    while run < linear.size and linear[run]:
        run += 1
    if run >= 3:
        q_minus = float(q[run])  # interior point index run -> grid index run
    run = 0
    while run < linear.size and linear[-1 - run]:
        run += 1
    if run >= 3:
        q_plus = float(q[q.size - 1 - run])
    return q_minus, q_plus, True


def curve_from_temperatures(q_grid: Sequence[float], T_values: Sequence[float],
                            evaluator: Callable[[float], float] | None = None,
                            deriv_step: float = DERIV_STEP) -> TemperatureCurve:
    """Assemble a TemperatureCurve (also used for synthetic inputs)."""
    q = np.asarray(q_grid, dtype=float)
    T = np.asarray(T_values, dtype=float)
    if np.any(np.diff(q) <= 0):
        raise DomainError("q grid must be sorted")
    if evaluator is not None:
        deriv = np.full(q.size, np.nan)
        for i in np.nonzero(np.isfinite(T))[0]:
            try:
                deriv[i] = (evaluator(q[i] + deriv_step) - evaluator(q[i] - deriv_step)) / (
                    2.0 * deriv_step)
            except ThermoError:
                pass
        if not np.all(np.isfinite(deriv[np.isfinite(T)])):
            deriv = _grid_derivatives(q, T)
    else:
        deriv = _grid_derivatives(q, T)
    f = np.isfinite(T)
    qf, Tf = q[f], T[f]
    if qf.size >= 3:
        hl = qf[1:-1] - qf[:-2]
        hr = qf[2:] - qf[1:-1]
        sd = ((Tf[2:] - Tf[1:-1]) / hr - (Tf[1:-1] - Tf[:-2]) / hl) * 0.5 * (hl + hr)
    else:
        sd = np.zeros(0)
    q_minus, q_plus, convex = _linear_tails(qf, sd)
    infinite_at_zero = bool(np.any(~f)) and bool(np.all(q[~f] < 0)) and bool(np.all(f[q >= 0]))
    return TemperatureCurve(q, T, deriv, q_minus, q_plus, infinite_at_zero, convex, evaluator)


def temperature_curve(fmap: MapSpec, phi: Potential, q_grid: Sequence[float],
                      method: Method | None = None, zero_tol: float = 1e-9) -> TemperatureCurve:
    method = default_method(fmap, phi) if method is None else method
    p0 = pressure(fmap, phi, method)
    if abs(p0) > NORMALIZATION_TOL:
        raise NotNormalized(f"P(phi) = {p0:.3g}, expected 0")

    def evaluate(q):
        return temperature(fmap, phi, float(q), method=method, zero_tol=zero_tol,
                           check_normalized=False)

    q = np.asarray(q_grid, dtype=float)
    T = np.array([evaluate(x) for x in q])
    return curve_from_temperatures(q, T, evaluator=evaluate)


# ----------------------------------------------------------------- dimension


def dimension_window(T_curve: TemperatureCurve) -> tuple[float, float]:
    """(alpha_lo, alpha_hi) = (-DT(q_plus), -DT(q_minus)), grid ends when absent."""
    f = T_curve.finite
    qf = T_curve.q_grid[f]
    q_hi = T_curve.q_plus if T_curve.q_plus is not None else float(qf[-1])
    q_lo = T_curve.q_minus if T_curve.q_minus is not None else float(qf[0])
    d = T_curve.derivative_estimates
    d_hi = float(d[np.nonzero(T_curve.q_grid == q_hi)[0][0]])
    d_lo = float(d[np.nonzero(T_curve.q_grid == q_lo)[0][0]])
    return -d_hi, -d_lo


def dimension_spectrum(T_curve: TemperatureCurve, alpha_grid: Sequence[float],
                       tol: float = ARG_TOL) -> SpectrumCurve:
    """D(alpha) = inf_q (T(q) + q alpha) over the finite part of the curve."""
    alpha = np.asarray(alpha_grid, dtype=float)
    lo, hi = dimension_window(T_curve)
    slack = 1e-9 * max(1.0, abs(hi))
    bad = (alpha < lo - slack) | (alpha > hi + slack)
    if np.any(bad):
        raise DomainError(
            f"alpha={alpha[bad][0]} outside the validity window [{lo:.6g}, {hi:.6g}]")
    f = T_curve.finite
    qf, Tf = T_curve.q_grid[f], T_curve.T_values[f]
    vals, qs, att = [], [], []
    for a in alpha:
        objective = None
        if T_curve.evaluator is not None:
            objective = lambda q, a=a: T_curve.at(q) + q * a  # noqa: E731
        q_star, fmin, attained = _grid_inf(qf, Tf + qf * a, objective, tol)
        vals.append(fmin)
        qs.append(q_star)
        att.append(attained)
    return SpectrumCurve(
        kind="Dimension",
        abscissa_grid=alpha,
        values=np.array(vals),
        domain=SpectrumDomain(lo, hi, True),
        argmins=np.array(qs),
        attained=np.array(att),
        lower_verified=np.ones(alpha.size, dtype=bool),
    )


def parametric_dimension_spectrum(T_curve: TemperatureCurve,
                                  dedupe_tol: float = 1e-6) -> list[tuple[float, float]]:
    """(-DT(q), T(q) - q DT(q)) for every finite grid q."""
    f = T_curve.finite
    q = T_curve.q_grid[f]
    T = T_curve.T_values[f]
    d = T_curve.derivative_estimates[f]
    pts: list[tuple[float, float]] = []
    for qi, ti, di in zip(q, T, d):
        pt = (float(-di), float(ti - qi * di))
        if not any(abs(pt[0] - p[0]) <= dedupe_tol and abs(pt[1] - p[1]) <= dedupe_tol
                   for p in pts):
            pts.append(pt)
    return pts


@dataclass(frozen=True)
class UnboundedDomainReport:
    alpha_c: float
    D_beyond: float
    q_infinity: float = 0.0


def unbounded_domain_report(T_curve: TemperatureCurve) -> UnboundedDomainReport:
    """alpha_c = -D+T(0); the spectrum equals T(0) for alpha >= alpha_c."""
    if not np.any(T_curve.is_infinite):
        raise NotApplicable("temperature is finite everywhere on the grid")
    q = T_curve.q_grid
    f = T_curve.finite
    right = np.nonzero((q >= 0) & f)[0]
    if right.size < 2 or q[right[0]] != 0.0:
        raise NotApplicable("need finite temperatures at q = 0 and to its right")
    qs, ts = q[right[:3]], T_curve.T_values[right[:3]]
    slope = one_sided_derivative(qs, ts, "right")
    return UnboundedDomainReport(alpha_c=-slope, D_beyond=float(ts[0]))


__all__ = [
    "INFINITE",
    "LegendreValue",
    "SpectrumCurve",
    "SpectrumDomain",
    "TemperatureCurve",
    "UnboundedDomainReport",
    "curve_from_temperatures",
    "dimension_spectrum",
    "dimension_window",
    "exponent_range",
    "golden_section_min",
    "legendre_lyapunov",
    "lyapunov_spectrum",
    "parametric_dimension_spectrum",
    "pressure_derivative",
    "temperature",
    "temperature_curve",
    "unbounded_domain_report",
]
