import math

import numpy as np
import pytest
import scipy.optimize

from thermofractal.equilibria import bernoulli_measure
from thermofractal.errors import DivergentSum, NotMarkovBase
from thermofractal.inducing import (
    base_from_interval,
    bowen_root,
    first_return_scheme,
    gibbs_branch_probs,
    induce_potential,
    induced_pressure,
    project_measure,
    truncate_and_pressure,
)
from thermofractal.maps import Geometric, LocallyConstant, chebyshev, constant_potential, doubling, piecewise_linear, tent
from thermofractal.pressure import CylinderMatrixMethod, pressure_curve, pressure_matrix

LN2 = math.log(2)


@pytest.fixture(scope="module")
def dscheme():
    return first_return_scheme(doubling(), (0.5, 1.0), max_time=20)


def test_doubling_scheme(dscheme):
    assert len(dscheme.branches) == 20
    for n, b in enumerate(dscheme.branches, start=1):
        assert b.tau == n
        assert b.word == (1,) + (0,) * (n - 1)
        assert b.domain[1] - b.domain[0] == pytest.approx(2.0 ** -n * 0.5, rel=1e-12)
        assert b.log_deriv == pytest.approx(n * LN2, rel=1e-14)
    assert dscheme.complete_mass == pytest.approx(1 - 2.0 ** -20, abs=1e-15)
    assert dscheme.distortion_bound == 1.0


def test_branches_disjoint_and_onto(dscheme):
    doms = sorted(b.domain for b in dscheme.branches)
    for (a0, b0), (a1, _) in zip(doms, doms[1:]):
        assert b0 <= a1 + 1e-15
    assert dscheme.endpoint_defect() < 1e-9


def test_trivial_scheme():
    # every depth-1 cylinder is its own base cell: one branch per symbol, all tau = 1
    sch = first_return_scheme(doubling(), (0.0, 1.0), max_time=1)
    assert sch.taus.tolist() == [1, 1]
    assert [b.domain for b in sch.branches] == [(0.0, 0.5), (0.5, 1.0)]
    assert sch.complete_mass == pytest.approx(1.0)


def test_linear_third_base():
    lin = piecewise_linear([1 / 3])
    sch = first_return_scheme(lin, (0,), max_time=12)
    assert sch.branches[0].word == (0,) and sch.branches[0].tau == 1
    assert sch.complete_mass > 0.99
    assert sch.distortion_bound == pytest.approx(1.0, abs=1e-12)


def test_not_markov_base():
    with pytest.raises(NotMarkovBase):
        base_from_interval(doubling(), 0.3, 0.7)


def test_induced_potential_examples(dscheme):
    n = dscheme.taus
    Phi = induce_potential(dscheme, Geometric(1.0))
    assert Phi.values == pytest.approx(-n * LN2, rel=1e-14)
    Phi = induce_potential(dscheme, constant_potential(doubling(), -LN2))
    assert Phi.values == pytest.approx(-n * LN2, rel=1e-14)
    Phi = induce_potential(dscheme, LocallyConstant((math.log(0.3), math.log(0.7))))
    assert Phi.values == pytest.approx(math.log(0.7) + (n - 1) * math.log(0.3), rel=1e-13)


def test_variation_bound_non_increasing():
    sch = first_return_scheme(chebyshev(), (1,), max_time=8)
    var = induce_potential(sch, Geometric(1.0), variation_depth=4).variation_bound
    assert all(b <= a + 1e-12 for a, b in zip(var, var[1:]))


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
def test_induced_pressure_identity_doubling(dscheme, t):
    Phi = induce_potential(dscheme, Geometric(t))
    assert abs(induced_pressure(dscheme, Phi, (1 - t) * LN2)) < 1e-8


def test_induced_pressure_divergent(dscheme):
    with pytest.raises(DivergentSum):
        induced_pressure(dscheme, induce_potential(dscheme, Geometric(0.0)), 0.0)


def test_induced_pressure_constant(dscheme):
    Phi = induce_potential(dscheme, constant_potential(doubling(), -LN2))
    assert abs(induced_pressure(dscheme, Phi, 0.0)) < 1e-8


@pytest.mark.parametrize("fmap,base", [(piecewise_linear([1 / 3]), (0,)),
                                       (tent(), (0.5, 1.0)),
                                       (piecewise_linear([0.25, 0.6]), (1,))],
                         ids=["lin3", "tent", "lin3br"])
def test_induced_pressure_identity_grid(fmap, base):
    sch = first_return_scheme(fmap, base, max_time=16)
    for t in np.linspace(-1.0, 2.0, 9):
        p = pressure_matrix(fmap, Geometric(t), 1)
        Phi = induce_potential(sch, Geometric(t), variation_depth=0)
        assert abs(induced_pressure(sch, Phi, p)) <= 1e-5


def test_abramov_equilibrium_recovery():
    fmap = piecewise_linear([0.4])
    sch = first_return_scheme(fmap, (0,), max_time=40)
    for t in (-0.5, 0.5, 1.5):
        p = pressure_matrix(fmap, Geometric(t), 1)
        Phi = induce_potential(sch, Geometric(t), variation_depth=0)
        mu = project_measure(sch, gibbs_branch_probs(Phi, p), Phi)
        assert mu.entropy - t * mu.lyapunov == pytest.approx(p, abs=1e-5)
        # the projection matches the Bernoulli equilibrium state
        w = np.array([0.4 ** t, 0.6 ** t])
        want = bernoulli_measure(fmap, w / w.sum())
        assert mu.lyapunov == pytest.approx(want.lyapunov, abs=1e-5)


def test_project_geometric(dscheme):
    p = 2.0 ** -dscheme.taus
    mu = project_measure(dscheme, p / p.sum())
    assert mu.entropy == pytest.approx(LN2, abs=1e-5)
    assert mu.lyapunov == pytest.approx(LN2, abs=1e-5)
    assert mu.dimension == pytest.approx(1.0, abs=1e-5)


def test_project_point_masses(dscheme):
    p = np.zeros(len(dscheme.branches))
    p[0] = 1.0
    mu = project_measure(dscheme, p)
    assert mu.entropy == 0.0
    assert mu.lyapunov == pytest.approx(LN2)
    trivial = first_return_scheme(doubling(), (1,), max_time=1)
    mu = project_measure(trivial, [1.0])
    assert mu.entropy == 0.0 and mu.lyapunov == pytest.approx(trivial.branches[0].log_deriv)


def test_truncation(dscheme):
    curve = pressure_curve(doubling(), Geometric, np.linspace(0, 2, 5), CylinderMatrixMethod(1))
    rep20 = truncate_and_pressure(dscheme, 20, [1.0], curve)
    s20 = rep20.p_N_values[0]
    assert abs(s20) <= 1e-6  # truncated series sums to 1 - 2^-20
    n = np.arange(1, 21)
    oracle = scipy.optimize.brentq(lambda s: np.sum(2.0 ** -n * np.exp(-n * s)) - 1, -1, 1,
                                   xtol=1e-15)
    assert s20 == pytest.approx(oracle, abs=1e-12)
    assert 0 <= rep20.delta <= 1e-6
    rep2 = truncate_and_pressure(dscheme, 2, [1.0], curve)
    # e^-s/2 + e^-2s/4 = 1 gives e^-s = sqrt(5) - 1
    assert rep2.p_N_values[0] == pytest.approx(-math.log(math.sqrt(5) - 1), abs=1e-10)


def test_truncation_monotone(dscheme):
    t_grid = np.linspace(0.25, 2.0, 8)
    curve = pressure_curve(doubling(), Geometric, t_grid, CylinderMatrixMethod(1))
    prev, prev_delta = None, math.inf
    for N in (1, 2, 4, 8, 16, 20):
        rep = truncate_and_pressure(dscheme, N, t_grid, curve)
        assert np.all(rep.p_N_values <= rep.p_values + 1e-9)
        assert rep.delta >= -1e-9 and rep.delta <= prev_delta + 1e-12
        if prev is not None:
            assert np.all(rep.p_N_values >= prev - 1e-12)
        prev, prev_delta = rep.p_N_values, rep.delta


def test_bowen_root_matches_pressure():
    fmap = piecewise_linear([1 / 3])
    sch = first_return_scheme(fmap, (1,), max_time=20)
    Phi = induce_potential(sch, Geometric(0.0), variation_depth=0)
    assert bowen_root(sch, Phi, extrapolate_tail=True) == pytest.approx(LN2, abs=1e-5)
