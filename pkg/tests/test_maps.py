import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holonomy.maps import (EMPTY, Affine, Composite, Hermite, Interval, InvalidMap, LocalMap, Moebius,
                           NumericInverse, OutOfDomain, expr_from_dict, invert, log_deriv_lipschitz)

finite = st.floats(-10, 10, allow_nan=False)


def test_open_and_closed_membership():
    iv = Interval(0, 0.0, 1.0)
    assert not iv.contains(0.0) and iv.contains(0.5) and not iv.contains(1.0)
    cl = Interval.closed(0, 0.0, 1.0)
    assert cl.contains(0.0) and cl.contains(1.0)
    assert list(iv.contains(np.array([-1, 0.5, 2]))) == [False, True, False]


def test_intersection_and_empty():
    a, b = Interval(0, 0, 2), Interval.closed(0, 1, 3)
    c = a.intersect(b)
    assert (c.lo, c.hi, c.closed_lo, c.closed_hi) == (1, 2, True, False)
    assert Interval(0, 0, 1).intersect(Interval(0, 1, 2)) is EMPTY
    assert Interval(0, 0, 1).intersect(Interval(1, 0, 1)) is EMPTY
    assert not EMPTY and EMPTY.length == 0


def test_reversed_interval_rejected():
    with pytest.raises(ValueError):
        Interval(0, 1.0, 0.0)


@given(lo=finite, width=st.floats(0.01, 5), r=st.floats(0, 1))
def test_thicken_contains_original(lo, width, r):
    iv = Interval(0, lo, lo + width)
    assert iv.thicken(r).contains_interval(iv)


def test_affine_inverse_and_orientation():
    f = Affine(2.0, 1.0)
    assert f.inverse().value(f.value(0.3)) == pytest.approx(0.3)
    with pytest.raises(InvalidMap):
        Affine(-1.0, 0.0)


@given(x=st.floats(-0.3, 0.9))
def test_moebius_derivative_matches_determinant(x):
    m = Moebius(1, 0, 1, 1)
    assert m.deriv(x) == pytest.approx(1 / (x + 1) ** 2, rel=1e-14)
    assert m.inverse().value(m.value(x)) == pytest.approx(x, abs=1e-14)


def test_moebius_rejects_negative_determinant():
    with pytest.raises(InvalidMap):
        Moebius(0, 1, 1, 0)


def test_composite_chain_rule():
    c = Composite([Affine(2, 0), Moebius(1, 0, 1, 1)])
    x, h = 0.2, 1e-6
    fd = (c.value(x + h) - c.value(x - h)) / (2 * h)
    assert c.deriv(x) == pytest.approx(fd, rel=1e-8)
    assert c.inverse().value(c.value(x)) == pytest.approx(x, abs=1e-13)


def test_hermite_interpolates_and_inverts():
    h = Hermite([0, 1, 2], [0, 1.5, 2], [1, 1, 0.5])
    assert h.value(1.0) == pytest.approx(1.5)
    assert h.deriv(2.0) == pytest.approx(0.5)
    inv = h.inverse()
    assert isinstance(inv, NumericInverse)
    ys = np.linspace(0.01, 1.99, 50)
    assert np.allclose(h.value(inv.value(ys)), ys, atol=1e-13)
    with pytest.raises(OutOfDomain):
        inv.value(5.0)


def test_hermite_rejects_nonmonotone():
    with pytest.raises(InvalidMap):
        Hermite([0, 1], [0, 1], [1, -1])
    with pytest.raises(InvalidMap):
        Hermite([0, 1], [0, 0.1], [5, 5])  # overshoot forces a negative slope


@pytest.mark.parametrize("expr", [Affine(2, 1), Moebius(1, 0, 1, 1), Composite([Affine(2, 0), Affine(1, 1)]),
                                  Hermite([0, 1], [0, 2], [1, 3])])
def test_dict_round_trip(expr):
    back = expr_from_dict(expr.to_dict())
    xs = np.linspace(0.1, 0.9, 7)
    assert np.allclose(back.value(xs), expr.value(xs))


def test_localmap_domain_guard_and_invert():
    g = LocalMap("g", Affine(2, 0), Interval(0, -0.5, 0.5), Interval(0, -0.7, 0.7), 0, "g^-1")
    assert g(0.25) == 0.5
    with pytest.raises(OutOfDomain):
        g(0.8)
    gi = invert(g)
    assert gi.id == "g^-1" and gi.inverse_id == "g"
    assert (gi.domain.lo, gi.domain.hi) == (-1.0, 1.0)
    assert g.deriv_bounds() == (2.0, 2.0)


def test_log_deriv_lipschitz_oracle():
    # log of 1/(1+x)^2 has derivative -2/(1+x); sup over [0, 1] is 2
    assert log_deriv_lipschitz(Moebius(1, 0, 1, 1), 0.0, 1.0, npts=20001) == pytest.approx(2.0, rel=1e-3)
    assert log_deriv_lipschitz(Affine(3, 0), 0, 1) == 0.0
    assert math.isfinite(log_deriv_lipschitz(Hermite([0, 1], [0, 1], [1, 1]), 0, 1))
