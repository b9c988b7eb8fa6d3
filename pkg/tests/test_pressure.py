import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from thermofractal.errors import BudgetError, NonFiniteWeight
from thermofractal.maps import Geometric, LocallyConstant, chebyshev, doubling, piecewise_linear, tent
from thermofractal.pressure import (
    CylinderMatrixMethod,
    PeriodicOrbitMethod,
    curve_from_samples,
    detect_phase_transitions,
    logsumexp,
    perron,
    pressure_curve,
    pressure_matrix,
    pressure_periodic,
    transition_log_weights,
)
from thermofractal.symbolic import locate_periodic

LN2 = math.log(2)


def lin3_closed(t):
    return math.log(3.0 ** -t + 1.5 ** -t)


@pytest.mark.parametrize("t", [-1.0, 0.0, 0.5, 2.0])
def test_periodic_doubling_exact(dbl, t):
    for n in (1, 5, 10):
        assert pressure_periodic(dbl, Geometric(t), n) == pytest.approx((1 - t) * LN2, abs=1e-12)


def test_periodic_doubling_t2(dbl):
    assert pressure_periodic(dbl, Geometric(2.0), 8) == pytest.approx(-LN2, abs=1e-12)


def test_periodic_linear_third_bowen(lin3):
    assert abs(pressure_periodic(lin3, Geometric(1.0), 14)) < 1e-6


def test_periodic_chebyshev_entropy(cheb):
    assert pressure_periodic(cheb, Geometric(0.0), 10) == pytest.approx(LN2, abs=1e-3)


def test_base_symbol_is_an_order_one_over_n_shift(lin3):
    # restricting to one base cylinder changes the sum by a bounded factor,
    # so the two estimates differ by O(1/n) and share the same limit
    full = pressure_periodic(lin3, Geometric(0.5), 14)
    gaps = []
    for n in (8, 16):
        b0 = pressure_periodic(lin3, Geometric(0.5), n, base_symbol=0)
        b1 = pressure_periodic(lin3, Geometric(0.5), n, base_symbol=1)
        assert b0 <= full + 1e-12 and b1 <= full + 1e-12
        gaps.append(max(abs(b0 - lin3_closed(0.5)), abs(b1 - lin3_closed(0.5))))
        assert gaps[-1] <= 1.0 / n
    assert gaps[1] < gaps[0]


def test_matrix_examples(dbl, lin3):
    assert abs(pressure_matrix(dbl, Geometric(1.0), 1)) < 1e-12
    for t in (-2.0, 0.0, 0.7, 3.0):
        assert pressure_matrix(lin3, Geometric(t), 1) == pytest.approx(lin3_closed(t), abs=1e-12)
    bern = LocallyConstant((math.log(0.3), math.log(0.7)))
    assert abs(pressure_matrix(dbl, bern, 1)) < 1e-12


def test_method_agreement_linear_third(lin3):
    for t in (0.0, 1.0, 2.0):
        a = pressure_periodic(lin3, Geometric(t), 14)
        b = pressure_matrix(lin3, Geometric(t), 1)
        assert a == pytest.approx(lin3_closed(t), abs=1e-6)
        assert b == pytest.approx(lin3_closed(t), abs=1e-6)


def test_method_agreement_chebyshev(cheb):
    # nonlinear branches: both estimators approach each other as n and k grow
    a = pressure_periodic(cheb, Geometric(0.5), 14)
    b = pressure_matrix(cheb, Geometric(0.5), 8)
    assert abs(a - b) < 0.05


def test_perron_against_scipy(cheb):
    k = 3
    W = transition_log_weights(cheb, Geometric(0.8), k)
    m = cheb.m
    dense = np.zeros((m ** k, m ** k))
    for i in range(m ** k):
        for a in range(m):
            dense[i, (i * m + a) % m ** k] = math.exp(W[i, a])
    rho = max(abs(scipy.linalg.eigvals(dense)))
    assert perron(W, m, k).log_radius == pytest.approx(math.log(rho), abs=1e-11)


def test_logsumexp_rejects_nan():
    with pytest.raises(NonFiniteWeight):
        logsumexp(np.array([0.0, np.nan]))


def test_budget(dbl):
    with pytest.raises(BudgetError):
        pressure_periodic(dbl, Geometric(1.0), 12, budget=1000)


def test_curve_doubling(dbl):
    curve = pressure_curve(dbl, Geometric, [0.0, 1.0, 2.0], PeriodicOrbitMethod(6))
    assert curve.values == pytest.approx([LN2, 0.0, -LN2], abs=1e-12)
    assert curve.transition_report.kinks == ()


def test_curve_parallel_is_deterministic(cheb):
    grid = np.linspace(-2, 2, 17)
    a = pressure_curve(cheb, Geometric, grid, PeriodicOrbitMethod(10), workers=1)
    b = pressure_curve(cheb, Geometric, grid, PeriodicOrbitMethod(10), workers=4)
    assert np.array_equal(a.values, b.values)


def test_chebyshev_kink(cheb):
    grid = np.linspace(-3, 3, 61)
    curve = pressure_curve(cheb, Geometric, grid, PeriodicOrbitMethod(12))
    kinks = curve.transition_report.kinks
    assert len(kinks) == 1
    assert -1.05 <= kinks[0].location <= -0.95
    assert curve.is_convex()
    assert np.all(np.diff(curve.values) <= 1e-12)


def test_synthetic_kink():
    grid = np.linspace(-3, 3, 121)
    vals = np.maximum((1 - grid) * LN2, -2 * grid * LN2)
    rep = curve_from_samples(grid, vals).transition_report
    assert len(rep.kinks) == 1
    assert rep.kinks[0].location == pytest.approx(-1.0, abs=grid[1] - grid[0])
    assert rep.kinks[0].gap == pytest.approx(LN2, abs=0.05)


def test_smooth_curve_has_no_kink():
    grid = np.linspace(0, 2, 121)
    rep = detect_phase_transitions(curve_from_samples(grid, (1 - grid) ** 2), 0.05)
    assert rep.kinks == ()


def test_kink_negative_control():
    # a huge tolerance hides the real kink
    grid = np.linspace(-3, 3, 121)
    vals = np.maximum((1 - grid) * LN2, -2 * grid * LN2)
    assert detect_phase_transitions(curve_from_samples(grid, vals), 10.0).kinks == ()


def test_mp_flat_tail(mp):
    grid = np.linspace(0.5, 1.5, 11)
    values = {}
    for n in (10, 14):
        curve = pressure_curve(mp, Geometric, grid, PeriodicOrbitMethod(n))
        assert np.all(curve.values >= 0)
        values[n] = curve.values
    i = int(np.argmin(np.abs(grid - 1.25)))
    # the spurious positive tail shrinks as the period grows
    assert 0 <= values[14][i] < values[10][i]


@pytest.mark.parametrize("fmap", [doubling(), tent(), piecewise_linear([0.2, 0.7]), chebyshev()],
                         ids=lambda f: f.name)
def test_orbit_measures_bound_pressure(fmap):
    grid = np.linspace(-2, 2, 9)
    curve = pressure_curve(fmap, Geometric, grid, PeriodicOrbitMethod(10))
    for orbit in locate_periodic(fmap, 3)[::3]:
        lam = orbit.birkhoff_log_deriv / 3
        assert np.all(curve.values >= -grid * lam - 1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=8, unique=True))
def test_convex_and_nonincreasing(ts):
    grid = np.sort(np.array(ts))
    if np.min(np.diff(grid)) < 1e-3:
        return
    curve = pressure_curve(piecewise_linear([0.4]), Geometric, grid, CylinderMatrixMethod(1))
    assert curve.is_convex()
    assert np.all(np.diff(curve.values) <= 1e-12)
