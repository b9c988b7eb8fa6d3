import math

import numpy as np
import pytest

from thermofractal.errors import BudgetError
from thermofractal.maps import chebyshev, chebyshev_conjugacy, doubling, manneville_pomeau, piecewise_linear, tent
from thermofractal.symbolic import (
    PeriodicCache,
    decode,
    encode,
    enumerate_cylinders,
    itinerary,
    locate_periodic,
    periodic_table,
)

FAMILIES = [doubling(), tent(), piecewise_linear([1 / 3]), chebyshev(), manneville_pomeau(0.5)]


def test_encode_roundtrip():
    for i in range(27):
        assert encode(decode(i, 3, 3), 3) == i
    assert encode((1, 0, 1), 2) == 5  # first symbol most significant


def test_cylinders_doubling(dbl):
    c1 = enumerate_cylinders(dbl, 1)
    assert [c.interval for c in c1] == [pytest.approx((0, 0.5)), pytest.approx((0.5, 1))]
    c2 = enumerate_cylinders(dbl, 2)
    assert [c.word for c in c2] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(c.length == pytest.approx(0.25) for c in c2)


def test_cylinder_linear_third(lin3):
    c = enumerate_cylinders(lin3, 2)[0]
    assert c.word == (0, 0)
    assert c.interval == pytest.approx((0.0, 1 / 9), abs=1e-15)


def test_cylinder_budget(dbl):
    with pytest.raises(BudgetError):
        enumerate_cylinders(dbl, 30)


@pytest.mark.parametrize("fmap", FAMILIES, ids=lambda f: f.name)
def test_cylinder_lengths_sum_to_one(fmap):
    for k in (1, 4, 9):
        total = math.fsum(c.length for c in enumerate_cylinders(fmap, k))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_cylinders_nested(cheb):
    parent = {c.word: c.interval for c in enumerate_cylinders(cheb, 3)}
    for c in enumerate_cylinders(cheb, 4):
        lo, hi = parent[c.word[:3]]
        assert lo - 1e-15 <= c.interval[0] and c.interval[1] <= hi + 1e-15


def test_periodic_doubling(dbl):
    orbits = locate_periodic(dbl, 2)
    pts = sorted(o.point for o in orbits)
    assert pts == pytest.approx([0, 1 / 3, 2 / 3, 1], abs=1e-13)
    assert all(o.birkhoff_log_deriv == pytest.approx(2 * math.log(2)) for o in orbits)


def test_periodic_chebyshev_fixed(cheb):
    orbits = locate_periodic(cheb, 1)
    got = {round(o.point, 12): o.birkhoff_log_deriv for o in orbits}
    assert got[0.0] == pytest.approx(math.log(4))
    assert got[0.75] == pytest.approx(math.log(2))


def test_periodic_linear_fixed(lin3):
    orbits = locate_periodic(lin3, 1)
    assert orbits[0].point == pytest.approx(0.0, abs=1e-15)
    assert orbits[0].birkhoff_log_deriv == pytest.approx(math.log(3))
    assert orbits[1].point == pytest.approx(1.0, abs=1e-15)
    assert orbits[1].birkhoff_log_deriv == pytest.approx(math.log(1.5))


@pytest.mark.parametrize("fmap", FAMILIES, ids=lambda f: f.name)
def test_periodic_count_and_itinerary(fmap):
    n = 6
    orbits = locate_periodic(fmap, n)
    assert len(orbits) == fmap.m ** n
    for o in orbits[1:-1:7]:
        assert itinerary(fmap, o.point, n) == o.word


def test_chebyshev_against_tent_conjugacy(cheb):
    n = 5
    orbits = locate_periodic(cheb, n)
    tent_pts = np.array([o.point for o in locate_periodic(tent(), n)])
    # tent periodic points y map to chebyshev periodic points h(y)
    want = np.sort(chebyshev_conjugacy(tent_pts))
    got = np.sort([o.point for o in orbits])
    assert np.max(np.abs(got - want)) < 1e-10


def test_itinerary_examples(dbl, cheb):
    assert itinerary(dbl, 0.3, 3) == (0, 1, 0)
    assert itinerary(dbl, 0.0, 4) == (0, 0, 0, 0)
    assert itinerary(cheb, 0.75, 3) == (1, 1, 1)


def test_itinerary_tiebreak_left(dbl):
    assert itinerary(dbl, 0.5, 1) == (0,)


def test_cache_roundtrip(tmp_path, cheb):
    cache = PeriodicCache(tmp_path)
    table = periodic_table(cheb, 7)
    cache.save(cheb, table)
    back = cache.load(cheb, 7)
    assert np.max(np.abs(back.points - table.points)) <= 1e-12
    assert np.max(np.abs(back.birkhoff - table.birkhoff)) <= 1e-12
    assert cache.load(doubling(), 7) is None
