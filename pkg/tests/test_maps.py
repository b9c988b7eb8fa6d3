import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermofractal.errors import ConfigError, CriticalPointError, DomainError
from thermofractal.maps import (
    Combined,
    Geometric,
    LocallyConstant,
    chebyshev,
    chebyshev_conjugacy,
    doubling,
    evaluate,
    log_abs_deriv,
    manneville_pomeau,
    map_from_config,
    piecewise_linear,
    potential_at,
    tent,
)

FAMILIES = [doubling(), tent(), piecewise_linear([1 / 3]), piecewise_linear([0.2, 0.7]),
            chebyshev(), manneville_pomeau(0.5)]


def test_eval_examples(dbl, cheb, lin3):
    assert evaluate(dbl, 0.3) == pytest.approx(0.6, abs=1e-15)
    assert evaluate(cheb, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert evaluate(lin3, 0.5) == pytest.approx(0.25, abs=1e-15)


def test_eval_rejects_outside(dbl):
    with pytest.raises(DomainError):
        evaluate(dbl, 1.5)
    with pytest.raises(DomainError):
        evaluate(dbl, -0.1)


def test_log_abs_deriv_examples(dbl, cheb):
    assert log_abs_deriv(dbl, 0.77) == pytest.approx(math.log(2), abs=1e-15)
    assert log_abs_deriv(cheb, 0.0) == pytest.approx(math.log(4), abs=1e-15)
    assert log_abs_deriv(cheb, 0.25) == pytest.approx(math.log(2), abs=1e-15)


def test_critical_point_raises(cheb):
    with pytest.raises(CriticalPointError):
        log_abs_deriv(cheb, 0.5)


def test_potential_examples(dbl):
    assert potential_at(dbl, Geometric(1.0), 0.3) == pytest.approx(-math.log(2), abs=1e-15)
    base = LocallyConstant((math.log(0.3), math.log(0.7)))
    assert potential_at(dbl, base, 0.8) == pytest.approx(math.log(0.7), abs=1e-15)
    assert potential_at(dbl, Combined(0.0, 1.0, base), 0.1) == pytest.approx(math.log(0.3))


def test_combined_geometric_part(cheb):
    base = LocallyConstant((0.5, -0.5))
    x = 0.2
    want = -2.0 * log_abs_deriv(cheb, x) + 3.0 * 0.5
    assert potential_at(cheb, Combined(2.0, 3.0, base), x) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("fmap", FAMILIES, ids=lambda f: f.name)
def test_branch_bijectivity(fmap):
    for br in fmap.branches:
        a, b = br.domain
        ends = sorted(float(br.forward(np.array([v]))[0]) for v in (a, b))
        assert ends[0] == pytest.approx(0.0, abs=1e-12)
        assert ends[1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("fmap", FAMILIES, ids=lambda f: f.name)
def test_domains_partition(fmap):
    lo = 0.0
    for br in fmap.branches:
        assert br.domain[0] == pytest.approx(lo, abs=1e-15)
        lo = br.domain[1]
    assert lo == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("fmap", FAMILIES, ids=lambda f: f.name)
def test_orientation_matches_derivative_sign(fmap):
    for br in fmap.branches:
        a, b = br.domain
        x = np.linspace(a, b, 41)[1:-1]
        d = br.derivative(x)
        assert np.all(np.sign(d) == br.orientation)


def test_chebyshev_conjugacy():
    y = np.linspace(0, 1, 1000)
    tent_y = np.where(y <= 0.5, 2 * y, 2 - 2 * y)
    h = chebyshev_conjugacy(y)
    assert np.max(np.abs(4 * h * (1 - h) - chebyshev_conjugacy(tent_y))) < 1e-10


@pytest.mark.parametrize("fmap", FAMILIES, ids=lambda f: f.name)
def test_critical_set_consistency(fmap):
    for c in fmap.critical_points:
        b = fmap.branch_index(np.array([c]))
        assert abs(float(fmap.derivative_on(np.array([c]), b)[0])) < 1e-8


def test_expanding_families_have_slope_above_one():
    for fmap in (doubling(), tent(), piecewise_linear([1 / 3]), piecewise_linear([0.2, 0.7])):
        x = np.linspace(0, 1, 2001)
        d = np.abs(fmap.derivative_on(x, fmap.branch_index(x)))
        assert d.min() > 1.0


def test_mp_is_flagged_outside_class(mp):
    assert not mp.in_model_class
    assert log_abs_deriv(mp, 0.0) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0))
def test_map_stays_in_unit_interval(x):
    for fmap in FAMILIES:
        y = evaluate(fmap, x)
        assert -1e-12 <= y <= 1.0 + 1e-12


def test_config_loading():
    fmap = map_from_config({"family": "piecewise_linear", "breakpoints": "1/3"})
    assert evaluate(fmap, 0.5) == pytest.approx(0.25)
    with pytest.raises(ConfigError):
        map_from_config({"family": "logistic"})
    with pytest.raises(ConfigError):
        map_from_config({"family": "doubling", "slope": "2"})
