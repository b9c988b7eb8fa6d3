import math

import numpy as np
import pytest
import scipy.optimize

from thermofractal.errors import DomainError, NotApplicable, NotNormalized
from thermofractal.maps import Geometric, LocallyConstant, constant_potential, doubling, piecewise_linear
from thermofractal.pressure import CylinderMatrixMethod, PeriodicOrbitMethod, curve_from_samples, pressure_curve
from thermofractal.spectra import (
    curve_from_temperatures,
    dimension_spectrum,
    golden_section_min,
    legendre_lyapunov,
    lyapunov_spectrum,
    parametric_dimension_spectrum,
    pressure_derivative,
    temperature,
    temperature_curve,
    unbounded_domain_report,
)

LN2 = math.log(2)
BERN = LocallyConstant((math.log(0.3), math.log(0.7)))
LAM_ACIP = math.log(3) / 3 + 2 * math.log(1.5) / 3


def T_closed(q, p=0.3):
    return math.log(p ** q + (1 - p) ** q) / LN2


def DT_closed(q, p=0.3):
    a, b = p ** q, (1 - p) ** q
    return (a * math.log(p) + b * math.log(1 - p)) / ((a + b) * LN2)


def lin3_p(t):
    return math.log(3.0 ** -t + 1.5 ** -t)


@pytest.fixture(scope="module")
def lin3_curve():
    fmap = piecewise_linear([1 / 3])
    return pressure_curve(fmap, Geometric, np.linspace(-8, 8, 81), CylinderMatrixMethod(1))


@pytest.fixture(scope="module")
def cheb_synthetic():
    grid = np.linspace(-3, 3, 121)
    vals = np.maximum((1 - grid) * LN2, -2 * grid * LN2)
    return curve_from_samples(grid, vals, evaluator=lambda t: max((1 - t) * LN2, -2 * t * LN2))


@pytest.fixture(scope="module")
def bern_T():
    return temperature_curve(doubling(), BERN, np.linspace(-5, 5, 41))


def test_golden_section_against_scipy():
    f = lambda x: (x - 0.3) ** 2 + math.cosh(x)  # noqa: E731
    x, fx = golden_section_min(f, -2, 2, tol=1e-10)
    ref = scipy.optimize.minimize_scalar(f, bounds=(-2, 2), method="bounded",
                                         options={"xatol": 1e-12}).x
    assert x == pytest.approx(ref, abs=1e-7)
    assert fx == pytest.approx(f(ref), abs=1e-14)


def test_legendre_doubling():
    curve = pressure_curve(doubling(), Geometric, np.linspace(-2, 2, 9), CylinderMatrixMethod(1))
    r = legendre_lyapunov(curve, LN2)
    assert r.value == pytest.approx(1.0, abs=1e-12)
    assert r.degenerate
    assert lyapunov_spectrum(curve, [LN2]).values == pytest.approx([1.0], abs=1e-12)


def test_legendre_acip(lin3_curve):
    r = legendre_lyapunov(lin3_curve, LAM_ACIP)
    assert r.value == pytest.approx(1.0, abs=1e-6)
    assert r.t_star == pytest.approx(1.0, abs=1e-4)


def test_legendre_kink(cheb_synthetic):
    assert legendre_lyapunov(cheb_synthetic, 1.2 * LN2).value == pytest.approx(2 / 3, abs=1e-9)
    vals = lyapunov_spectrum(cheb_synthetic, [1.1 * LN2, 1.5 * LN2, 1.9 * LN2]).values
    assert vals == pytest.approx([0.9 / 1.1, 0.5 / 1.5, 0.1 / 1.9], abs=1e-9)


def test_legendre_out_of_range(lin3_curve):
    with pytest.raises(DomainError):
        legendre_lyapunov(lin3_curve, 2.0)
    with pytest.raises(DomainError):
        legendre_lyapunov(lin3_curve, 0.0)


def test_lyapunov_spectrum_linear_third(lin3_curve):
    lam = np.linspace(math.log(1.5) + 0.01, math.log(3) - 0.01, 21)
    spectrum = lyapunov_spectrum(lin3_curve, lam)

    def oracle(l):
        res = scipy.optimize.minimize_scalar(lambda t: lin3_p(t) + t * l, bounds=(-40, 40),
                                             method="bounded", options={"xatol": 1e-12})
        return res.fun / l

    want = np.array([oracle(l) for l in lam])
    assert np.max(np.abs(spectrum.values - want)) < 1e-7
    assert spectrum.values.max() <= 1 + 1e-6 and spectrum.values.min() >= 0
    assert spectrum.values[0] < 0.2 and spectrum.values[-1] < 0.2
    assert np.all(spectrum.second_differences() <= 1e-9)
    assert spectrum.lower_verified.all()


def test_lyapunov_parametric_consistency(lin3_curve):
    for t in (-1.0, 0.0, 0.5, 2.0):
        dp = pressure_derivative(lin3_curve, t)
        lam = -dp
        L = legendre_lyapunov(lin3_curve, lam).value
        assert L * lam == pytest.approx(lin3_p(t) - t * dp, abs=1e-4)


def test_lower_verified_region():
    # synthetic curve with a kink at t+ = 2 > 1: flat zero beyond, slope -0.5 before
    grid = np.linspace(-2, 4, 61)
    vals = np.array([max(1.0 - 0.5 * t, 0.0) + 0.02 * (t - 2) ** 2 * (t < 2) for t in grid])
    curve = curve_from_samples(grid, vals)
    rep = curve.transition_report
    assert rep.t_plus_estimate is not None and rep.t_plus_estimate > 1
    lo, hi = -curve.end_slopes[1], -curve.end_slopes[0]
    lam = np.linspace(max(lo, 1e-3), hi - 1e-3, 9)
    spectrum = lyapunov_spectrum(curve, lam)
    assert not spectrum.lower_verified.all()
    assert spectrum.lower_verified[-1]


def test_temperature_bernoulli_examples():
    fmap = doubling()
    assert abs(temperature(fmap, BERN, 1.0)) < 1e-10
    assert temperature(fmap, BERN, 0.0) == pytest.approx(1.0, abs=1e-10)
    assert temperature(fmap, BERN, 2.0) == pytest.approx(-0.785875, abs=1e-6)
    assert temperature(fmap, BERN, 2.0) == pytest.approx(T_closed(2.0), abs=1e-10)


def test_temperature_not_normalized():
    with pytest.raises(NotNormalized):
        temperature(doubling(), LocallyConstant((math.log(0.3), math.log(0.3))), 1.0)


def test_temperature_curve_bernoulli(bern_T):
    q = bern_T.q_grid
    assert not np.any(bern_T.is_infinite)
    assert np.max(np.abs(bern_T.T_values - [T_closed(v) for v in q])) < 1e-9
    assert np.all(np.diff(bern_T.T_values) < 0)
    assert bern_T.strictly_convex
    assert bern_T.q_minus is None and bern_T.q_plus is None
    assert np.max(np.abs(bern_T.derivative_estimates - [DT_closed(v) for v in q])) < 1e-6


def test_temperature_curve_uniform():
    tc = temperature_curve(doubling(), LocallyConstant((-LN2, -LN2)), np.linspace(-3, 3, 13))
    assert tc.T_values == pytest.approx(1 - tc.q_grid, abs=1e-10)
    assert not tc.strictly_convex
    pts = parametric_dimension_spectrum(tc)
    assert len(pts) == 1 and pts[0] == pytest.approx((1.0, 1.0), abs=1e-6)


def test_temperature_mp_infinite(mp):
    phi = constant_potential(mp, -LN2)
    for q in (-1.0, -0.5):
        assert temperature(mp, phi, q, method=PeriodicOrbitMethod(10)) == math.inf


def test_dimension_spectrum_bernoulli(bern_T):
    alphas = [-DT_closed(1.0), -DT_closed(0.0), -DT_closed(2.0)]
    spectrum = dimension_spectrum(bern_T, alphas)
    assert alphas[0] == pytest.approx(0.881291, abs=1e-6)
    # closed form -(ln .3 + ln .7) / (2 ln 2) = 1.1257694
    assert alphas[1] == pytest.approx(1.12578, abs=2e-5)
    assert spectrum.values[0] == pytest.approx(0.881291, abs=1e-6)
    assert spectrum.values[1] == pytest.approx(1.0, abs=1e-6)
    want2 = T_closed(2.0) - 2 * DT_closed(2.0)
    assert spectrum.values[2] == pytest.approx(want2, abs=1e-6)
    assert spectrum.argmins == pytest.approx([1.0, 0.0, 2.0], abs=1e-3)


def test_dimension_parametric_agreement(bern_T):
    pts = [(a, d) for a, d in parametric_dimension_spectrum(bern_T)]
    q = bern_T.q_grid
    i1, i0 = int(np.argmin(np.abs(q - 1))), int(np.argmin(np.abs(q)))
    assert pts[i1] == pytest.approx((0.881291, 0.881291), abs=1e-6)
    assert pts[i0] == pytest.approx((-DT_closed(0.0), 1.0), abs=1e-6)
    inner = [p for p in pts[5:-5]]
    spectrum = dimension_spectrum(bern_T, [a for a, _ in inner])
    assert np.max(np.abs(spectrum.values - [d for _, d in inner])) < 1e-5
    assert np.all(spectrum.values <= 1 + 1e-6) and np.all(spectrum.values >= 0)


def test_unbounded_report_synthetic():
    q = np.linspace(-2, 3, 21)
    T = np.where(q < 0, np.inf, 1 - q)
    rep = unbounded_domain_report(curve_from_temperatures(q, T))
    assert rep.alpha_c == pytest.approx(1.0, abs=1e-9)
    assert rep.D_beyond == pytest.approx(1.0, abs=1e-9)


def test_unbounded_report_not_applicable(bern_T):
    with pytest.raises(NotApplicable):
        unbounded_domain_report(bern_T)
