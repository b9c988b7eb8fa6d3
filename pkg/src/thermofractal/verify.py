"""Cross-module acceptance checks C1..C10 with closed-form oracles.

Each check builds fresh map objects (so no memoised periodic tables leak
between checks), computes through the public API, and compares against an
oracle written directly from the closed form.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .empirical import empirical_lyapunov_spectrum
from .equilibria import bernoulli_measure, check_gibbs
from .inducing import (
    first_return_scheme,
    gibbs_branch_probs,
    induce_potential,
    induced_pressure,
    project_measure,
    truncate_and_pressure,
)
from .maps import Geometric, LocallyConstant, chebyshev, doubling, piecewise_linear
from .pressure import (
    CylinderMatrixMethod,
    PeriodicOrbitMethod,
    geometric_family,
    pressure_curve,
    pressure_matrix,
    pressure_periodic,
)
from .spectra import (
    dimension_spectrum,
    legendre_lyapunov,
    parametric_dimension_spectrum,
    pressure_derivative,
    temperature_curve,
)

LN2 = math.log(2.0)
LN3 = math.log(3.0)
LN15 = math.log(1.5)


@dataclass
class CriterionResult:
    cid: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.cid} {status} ({self.seconds:.2f}s): {self.detail}"


@dataclass
class VerifyOptions:
    slope_gap_tol: float = 0.02
    extra: dict = field(default_factory=dict)


def linear_third_pressure(t: float) -> float:
    """Closed form for the two-branch map with breakpoint 1/3."""
    return math.log(3.0 ** -t + 1.5 ** -t)


def _oracle_golden(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12) -> float:
    # plain textbook golden-section search, kept separate from the library routine
    invphi = (math.sqrt(5) - 1) / 2
    while b - a > tol:
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        if f(c) < f(d):
            b = d
        else:
            a = c
    return f(0.5 * (a + b))


def linear_third_legendre(lam: float) -> float:
    return _oracle_golden(lambda t: linear_third_pressure(t) + t * lam, -60.0, 60.0) / lam


# ------------------------------------------------------------------ criteria


def c1(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = doubling()
    errs = []
    for t in (-2, -1, 0, 1, 2):
        exact = (1 - t) * LN2
        errs.append(abs(pressure_periodic(fmap, Geometric(t), 6) - exact))
        errs.append(abs(pressure_matrix(fmap, Geometric(t), 1) - exact))
    secs = time.perf_counter() - start
    err = max(errs)
    ok = err < 1e-10 and secs < 1.0
    return CriterionResult("C1", ok, f"max error {err:.2e} (< 1e-10), runtime < 1 s", secs)


def c2(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = piecewise_linear([1 / 3])
    grid = np.linspace(-3, 3, 25)
    e_per = max(abs(pressure_periodic(fmap, Geometric(t), 14) - linear_third_pressure(t))
                for t in grid)
    e_mat = max(abs(pressure_matrix(fmap, Geometric(t), 1) - linear_third_pressure(t))
                for t in grid)
    secs = time.perf_counter() - start
    ok = e_per < 1e-6 and e_mat < 1e-12 and secs < 10.0
    return CriterionResult(
        "C2", ok, f"periodic n=14 error {e_per:.2e} (< 1e-6), matrix k=1 error {e_mat:.2e} "
                  f"(< 1e-12)", secs)


def c3(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = piecewise_linear([1 / 3])
    curve = pressure_curve(fmap, geometric_family, np.linspace(-10, 10, 81),
                           CylinderMatrixMethod(1))
    lams = np.linspace(LN15 + 0.01, LN3 - 0.01, 21)
    e_leg = max(abs(legendre_lyapunov(curve, lam).value - linear_third_legendre(lam))
                for lam in lams)
    e_par = 0.0
    for t in np.linspace(-3, 3, 13):
        dp = pressure_derivative(curve, t)
        lhs = legendre_lyapunov(curve, -dp).value * (-dp)
        rhs = curve.at(t) - t * dp
        e_par = max(e_par, abs(lhs - rhs))
    secs = time.perf_counter() - start
    ok = e_leg < 1e-8 and e_par < 1e-4
    return CriterionResult(
        "C3", ok, f"Legendre vs oracle {e_leg:.2e} (< 1e-8) at 21 lambdas; parametric "
                  f"identity {e_par:.2e} (< 1e-4)", secs)


def c4(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = chebyshev()
    curve = pressure_curve(fmap, geometric_family, np.linspace(-3, 3, 61),
                           PeriodicOrbitMethod(18), slope_gap_tol=opts.slope_gap_tol)
    secs = time.perf_counter() - start
    kinks = curve.transition_report.kinks
    if len(kinks) != 1:
        return CriterionResult("C4", False, f"expected exactly one kink, found {len(kinks)} "
                                            f"(slope_gap_tol={opts.slope_gap_tol})", secs)
    k = kinks[0]
    ok = (-1.05 <= k.location <= -0.95 and abs(k.right_slope + LN2) <= 0.05
          and abs(k.left_slope + 2 * LN2) <= 0.05 and secs < 30.0)
    return CriterionResult(
        "C4", ok, f"kink at {k.location:.4f}, slopes {k.left_slope:.4f} | {k.right_slope:.4f} "
                  f"(oracle -1, {-2 * LN2:.4f} | {-LN2:.4f})", secs)


def c5(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = doubling()
    phi = LocallyConstant.from_probabilities([0.3, 0.7])
    q = np.linspace(-5, 5, 41)
    tc = temperature_curve(fmap, phi, q)
    exact = np.log2(0.3 ** q + 0.7 ** q)
    err = float(np.max(np.abs(tc.T_values - exact)))
    t1 = abs(tc.at(1.0))
    t0 = abs(tc.at(0.0) - 1.0)
    decreasing = bool(np.all(np.diff(tc.T_values) < 0))
    convex = bool(np.all(tc.second_differences() >= -1e-9))
    secs = time.perf_counter() - start
    ok = err < 1e-8 and t1 < 1e-10 and t0 < 1e-10 and decreasing and convex
    return CriterionResult(
        "C5", ok, f"max |T - closed form| {err:.2e}; |T(1)| {t1:.1e}; |T(0)-1| {t0:.1e}; "
                  f"decreasing={decreasing}; convex={convex}", secs)


def c6(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = doubling()
    phi = LocallyConstant.from_probabilities([0.3, 0.7])
    mu = bernoulli_measure(fmap, phi)
    good = check_gibbs(mu, phi, 0.0, 8)
    bad = check_gibbs(mu, LocallyConstant.from_probabilities([0.5, 0.5]), 0.0, 6)
    secs = time.perf_counter() - start
    ok = good.best_constant <= 1 + 1e-9 and bad.best_constant >= 7
    return CriterionResult(
        "C6", ok, f"Gibbs constant {good.best_constant:.12f} at depth 8 (<= 1 + 1e-9); "
                  f"mismatched control {bad.best_constant:.3f} (>= 7)", secs)


def c7(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = doubling()
    scheme = first_return_scheme(fmap, (0.5, 1.0), max_time=20)
    worst = 0.0
    for t in (0.0, 0.5, 2.0):
        p = pressure_matrix(fmap, Geometric(t), 1)
        Phi = induce_potential(scheme, Geometric(t))
        worst = max(worst, abs(induced_pressure(scheme, Phi, p)))
    Phi1 = induce_potential(scheme, Geometric(1.0))
    mu = project_measure(scheme, gibbs_branch_probs(Phi1, pressure_matrix(fmap, Geometric(1), 1)),
                         Phi1)
    eh = abs(mu.entropy - LN2)
    ed = abs(mu.dimension - 1.0)
    secs = time.perf_counter() - start
    ok = worst <= 1e-8 and eh <= 1e-5 and ed <= 1e-5
    return CriterionResult(
        "C7", ok, f"induced pressure identity {worst:.2e} (<= 1e-8); Abramov h error {eh:.2e}, "
                  f"dimension error {ed:.2e} (<= 1e-5)", secs)


def c8(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = doubling()
    scheme = first_return_scheme(fmap, (0.5, 1.0), max_time=20)
    curve = pressure_curve(fmap, geometric_family, np.linspace(-1, 3, 9), CylinderMatrixMethod(1))
    t_grid = np.linspace(0, 2, 5)
    deltas, excess = [], -math.inf
    for N in range(1, len(scheme.branches) + 1):
        rep = truncate_and_pressure(scheme, N, t_grid, curve)
        deltas.append(rep.delta)
        excess = max(excess, float(np.max(rep.p_N_values - rep.p_values)))
    deltas = np.array(deltas)
    monotone = bool(np.all(np.diff(deltas) <= 1e-12))
    small = bool(np.all(deltas[9:] < 0.01))
    secs = time.perf_counter() - start
    ok = monotone and small and excess <= 1e-9
    return CriterionResult(
        "C8", ok, f"delta non-increasing={monotone}; delta(10)={deltas[9]:.2e} (< 0.01); "
                  f"max p_N - p = {excess:.2e} (<= 1e-9)", secs)


def c9(opts: VerifyOptions) -> CriterionResult:
    fmap = piecewise_linear([1 / 3])
    lam_acip = LN3 / 3 + 2 * LN15 / 3
    centers = lam_acip + np.array([-0.12, -0.06, 0.06, 0.12, 0.18])
    start = time.perf_counter()
    est = empirical_lyapunov_spectrum(fmap, 200, 20_000, bins=centers)
    secs = time.perf_counter() - start
    curve = pressure_curve(fmap, geometric_family, np.linspace(-10, 10, 81),
                           CylinderMatrixMethod(1))
    ref = np.array([legendre_lyapunov(curve, c).value for c in centers])
    err = np.abs(est.dim_estimates - ref)
    ok = bool(np.all(err <= 0.05)) and secs < 60.0
    return CriterionResult(
        "C9", ok, "per-bin |empirical - Legendre| = "
                  + ", ".join(f"{e:.3f}" for e in err) + " (<= 0.05)", secs)


def c10(opts: VerifyOptions) -> CriterionResult:
    start = time.perf_counter()
    fmap = doubling()
    phi = LocallyConstant.from_probabilities([0.3, 0.7])
    tc = temperature_curve(fmap, phi, np.linspace(-5, 5, 41))
    pts = parametric_dimension_spectrum(tc)
    alpha = np.array([p[0] for p in pts])
    D_par = np.array([p[1] for p in pts])
    order = np.argsort(alpha)
    ds = dimension_spectrum(tc, alpha[order])
    agree = float(np.max(np.abs(ds.values - D_par[order])))
    a1 = -tc.derivative(1.0)
    a0 = -tc.derivative(0.0)
    at = dimension_spectrum(tc, [a1, a0]).values
    diag = abs(at[0] - a1)
    top = abs(at[1] - 1.0)
    concave = float(np.max(ds.second_differences()))
    secs = time.perf_counter() - start
    ok = agree <= 1e-5 and diag <= 1e-5 and top <= 1e-5 and concave <= 1e-9
    return CriterionResult(
        "C10", ok, f"direct vs parametric {agree:.2e}; |D(-DT(1)) + DT(1)| {diag:.2e}; "
                   f"|D(-DT(0)) - 1| {top:.2e}; max second difference {concave:.2e}", secs)


CRITERIA: dict[str, Callable[[VerifyOptions], CriterionResult]] = {
    "C1": c1, "C2": c2, "C3": c3, "C4": c4, "C5": c5,
    "C6": c6, "C7": c7, "C8": c8, "C9": c9, "C10": c10,
}


def run_criterion(cid: str, opts: VerifyOptions | None = None) -> CriterionResult:
    opts = VerifyOptions() if opts is None else opts
    try:
        return CRITERIA[cid](opts)
    except Exception as exc:  # a crash is a failure of that criterion, not of the suite
        return CriterionResult(cid, False, f"raised {type(exc).__name__}: {exc}")


def run_all(ids=None, opts: VerifyOptions | None = None) -> list[CriterionResult]:
    ids = list(CRITERIA) if ids is None else list(ids)
    return [run_criterion(cid, opts) for cid in ids]
