import dataclasses
import math

import numpy as np
import pytest

from holonomy.examples import build
from holonomy.expansion import estimate_constants
from holonomy.maps import Interval
from holonomy.pseudogroup import word_value_and_deriv
from holonomy.resilience import (TraceEscaped, detect_ping_pong, entropy_estimate, entropy_lower_estimate,
                                 ping_pong_to_resilient, separated_set)

IFS = build("ifs_ping_pong")


def constants(pg, a=0.3):
    return estimate_constants(pg, min(a / 200, pg.transversal.epsilon0), a=a)


@pytest.fixture(scope="module")
def ifs_cert():
    return detect_ping_pong(IFS, constants(IFS))


def test_ifs_certificate(ifs_cert):
    c = ifs_cert
    assert c is not None
    assert c.P.fixed_point == pytest.approx(0.0, abs=1e-10)
    assert c.Q.fixed_point == pytest.approx(1.0, abs=1e-10)
    assert c.powers == (1, 1)
    assert c.P.sup_deriv < 1 and c.Q.sup_deriv < 1
    # affine oracle: the images are J scaled by 1/4 about each fixed point
    (a, b) = c.images
    assert (a.lo, a.hi) == pytest.approx((c.J.lo / 4, c.J.hi / 4))
    assert (b.lo, b.hi) == pytest.approx(((c.J.lo + 3) / 4, (c.J.hi + 3) / 4))


def test_certificate_reverification(ifs_cert):
    c = ifs_cert
    xs = np.linspace(c.J.lo, c.J.hi, 1000)
    m1, m2 = c.powers
    ys_p, ys_q = xs, xs
    for _ in range(m1):
        ys_p = word_value_and_deriv(c.P.word, ys_p)[0]
    for _ in range(m2):
        ys_q = word_value_and_deriv(c.Q.word, ys_q)[0]
    assert ys_p.min() > c.J.lo and ys_p.max() < c.J.hi
    assert ys_q.min() > c.J.lo and ys_q.max() < c.J.hi
    gap = max(ys_q.min() - ys_p.max(), ys_p.min() - ys_q.max())
    assert gap >= c.disjointness_gap * (1 - 1e-9) and gap > 0


def test_resilient_trace(ifs_cert):
    r = ping_pong_to_resilient(ifs_cert)
    assert (r.x, r.y) == pytest.approx((0.0, 0.75))
    assert r.asymptotic_trace[1][0] == pytest.approx(0.1875)
    for ratio in r.ratios:
        assert ratio <= ifs_cert.P.sup_deriv * (1 + 1e-12)
        assert ratio == pytest.approx(0.25, abs=1e-9)
    assert r.asymptotic_trace[-1][1] < 1e-8


def test_resilient_roles_swapped(ifs_cert):
    swapped = dataclasses.replace(ifs_cert, P=ifs_cert.Q, Q=ifs_cert.P)
    r = ping_pong_to_resilient(swapped)
    assert (r.x, r.y) == pytest.approx((1.0, 0.25))
    assert all(v == pytest.approx(0.25, abs=1e-9) for v in r.ratios)


def test_tampered_certificate_escapes(ifs_cert):
    narrow = dataclasses.replace(ifs_cert.P, J=Interval.closed(0, -0.1, 0.1))
    with pytest.raises(TraceEscaped):
        ping_pong_to_resilient(dataclasses.replace(ifs_cert, P=narrow))


@pytest.mark.parametrize("name", ["isometric_translation", "isometric_rotation_pair", "doubling"])
def test_no_ping_pong(name):
    pg = build(name)
    assert detect_ping_pong(pg, constants(pg), density=16) is None


def test_detection_deterministic():
    c = constants(IFS)
    a = detect_ping_pong(IFS, c, density=16)
    b = detect_ping_pong(IFS, c, density=16)
    assert a is not None and a.to_dict() == b.to_dict()


def test_explicit_grid():
    cert = detect_ping_pong(IFS, constants(IFS), grid=[0.0, 1.0])
    assert cert is not None and cert.seeds == (0, 1)


def brute_separated(pg, pts, n, eps):
    """Check pairwise (n, eps)-separation directly over all enumerated words.

    Greedy points sit exactly ``eps`` apart in exact arithmetic, so allow
    rounding at the last few ulps.
    """
    from holonomy.pseudogroup import enumerate_words

    imgs = []
    for x in pts:
        imgs.append({w.letters: w.endpoint for w in enumerate_words(pg, x, n)})
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            common = imgs[i].keys() & imgs[j].keys()
            if not any(abs(imgs[i][k] - imgs[j][k]) >= eps * (1 - 1e-12) for k in common):
                return False
    return True


def test_separated_set_is_separated():
    pts = separated_set(IFS, 2, 0.5)
    assert brute_separated(IFS, pts, 2, 0.5)
    iso = build("isometric_translation")
    pts = separated_set(iso, 3, 0.1)
    assert brute_separated(iso, pts, 3, 0.1)


@pytest.mark.parametrize("name", ["isometric_translation", "isometric_rotation_pair"])
def test_isometric_entropy_zero(name):
    pg = build(name)
    for n in (1, 3):
        assert entropy_lower_estimate(pg, n, 0.01) < 0.02


def test_entropy_monotone_in_eps():
    counts = [entropy_estimate(IFS, 3, e).count for e in (0.01, 0.02, 0.05, 0.1)]
    values = [entropy_lower_estimate(IFS, 3, e) for e in (0.01, 0.02, 0.05, 0.1)]
    assert counts == sorted(counts, reverse=True)
    assert values == sorted(values, reverse=True)


def test_entropy_ifs_small_depth_positive():
    est = entropy_estimate(IFS, 3, 0.01)
    assert est.value > 0.5 and est.count > est.base_count
