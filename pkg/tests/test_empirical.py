import math

import numpy as np
import pytest

from thermofractal.empirical import (
    _orbit,
    empirical_lyapunov_spectrum,
    finite_time_lyapunov,
    orbit_sample,
    pointwise_dimension_estimate,
    start_points,
)
from thermofractal.equilibria import bernoulli_measure
from thermofractal.errors import CriticalPointError, DepthError, InsufficientData
from thermofractal.maps import doubling, piecewise_linear, tent

LN2 = math.log(2)
LAM_ACIP = math.log(3) / 3 + 2 * math.log(1.5) / 3


def test_doubling_exact(dbl):
    for n in (1, 10, 1000):
        assert finite_time_lyapunov(dbl, 0.3141, n) == pytest.approx(LN2, abs=1e-15)


def test_chebyshev_typical(cheb):
    assert finite_time_lyapunov(cheb, 0.123456, 100_000) == pytest.approx(LN2, abs=0.02)
    # three independent starts agree with each other
    _, logd = _orbit(cheb, np.array([0.123456, 0.234567, 0.654321]), 100_000)
    vals = logd.sum(axis=1) / 100_000
    assert np.all(np.abs(vals - LN2) < 0.02)
    assert np.ptp(vals) < 0.04


def test_linear_third_typical(lin3):
    x0 = float(start_points(1, seed=3)[0])
    assert finite_time_lyapunov(lin3, x0, 100_000) == pytest.approx(0.6365, abs=0.01)


def test_critical_orbit(cheb):
    with pytest.raises(CriticalPointError):
        finite_time_lyapunov(cheb, 0.5, 3)


def test_prefix_check(lin3):
    sample = orbit_sample(lin3, 0.1234, 5000)
    assert sample.check_prefixes(lin3)
    assert sample.exponent == pytest.approx(sample.birkhoff_log_deriv_prefixes[-1] / 5000)


def test_start_points_reproducible():
    a, b = start_points(50, seed=7), start_points(50, seed=7)
    assert np.array_equal(a, b)
    assert np.all((np.floor(a * 50) == np.arange(50)))


def test_doubling_single_bin(dbl):
    est = empirical_lyapunov_spectrum(dbl, 100, 600, scales=range(8, 17))
    assert est.bin_centers.size == 1
    assert est.bin_centers[0] == pytest.approx(LN2, abs=1e-9)
    assert est.dim_estimates[0] == pytest.approx(1.0, abs=1e-9)


def test_tent_single_bin():
    est = empirical_lyapunov_spectrum(tent(), 100, 600, scales=range(8, 17))
    assert est.bin_centers.size == 1
    assert est.dim_estimates[0] == pytest.approx(1.0, abs=0.05)
    assert np.all((0 <= est.dim_estimates) & (est.dim_estimates <= 1.05))


def test_insufficient_starts(lin3):
    with pytest.raises(InsufficientData):
        empirical_lyapunov_spectrum(lin3, 10, 2000)


def test_insufficient_bin(lin3):
    # a centre far in the tail collects fewer than 20 samples
    with pytest.raises(InsufficientData):
        empirical_lyapunov_spectrum(lin3, 100, 2000, bins=[1.09])


def test_convergence_order(lin3):
    # the RMS deviation of finite-time exponents from the typical value
    # shrinks like n^(-1/2): doubling n divides it by sqrt(2)
    x0 = start_points(400, seed=1)
    _, logd = _orbit(lin3, x0, 20_000)
    prefixes = np.cumsum(logd, axis=1)
    rms = []
    for n in (5000, 10_000, 20_000):
        e = prefixes[:, n - 1] / n
        rms.append(math.sqrt(np.mean((e - LAM_ACIP) ** 2)))
    for a, b in zip(rms, rms[1:]):
        assert b / a == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_pointwise_lebesgue(dbl):
    mu = bernoulli_measure(dbl, [0.5, 0.5])
    r = 2.0 ** -np.arange(4, 13)
    assert pointwise_dimension_estimate(mu, 0.377, r) == pytest.approx(1.0, abs=1e-3)


def test_pointwise_at_zero(dbl):
    mu = bernoulli_measure(dbl, [0.3, 0.7])
    r = 2.0 ** -np.arange(4, 16)
    assert pointwise_dimension_estimate(mu, 0.0, r) == pytest.approx(
        math.log(0.3) / math.log(0.5), abs=0.01)


def test_pointwise_typical(dbl):
    mu = bernoulli_measure(dbl, [0.3, 0.7])
    r = 2.0 ** -np.arange(4, 41)
    want = -(0.5 * math.log(0.3) + 0.5 * math.log(0.7)) / LN2
    # single points fluctuate with their digit frequencies, so average a
    # seeded Lebesgue sample
    xs = np.random.default_rng(5).random(60)
    est = [pointwise_dimension_estimate(mu, float(x), r) for x in xs]
    assert float(np.mean(est)) == pytest.approx(want, abs=0.02)


def test_pointwise_depth_error(dbl):
    mu = bernoulli_measure(dbl, [0.3, 0.7])
    with pytest.raises(DepthError):
        pointwise_dimension_estimate(mu, 0.4, [1e-3, 1e-30])
