import math

import numpy as np
import pytest

from holonomy.examples import build
from holonomy.expansion import AnalysisConstants, BudgetExhausted, estimate_constants
from holonomy.hyperbolic import (CertificationFailed, NoExpansionFound, banach_fixed_point,
                                 certify_contraction, check_no_hyperbolic_holonomy, extract_expanding_word,
                                 find_hyperbolic_fixed_point, pliss_truncate)
from holonomy.maps import Affine, Interval, LocalMap
from holonomy.pliss import find_regular_index
from holonomy.pseudogroup import Pseudogroup, Transversal, make_word, word_value_and_deriv

DOUBLING = build("doubling")
IFS = build("ifs_ping_pong")


def constants(pg, a=0.3):
    return estimate_constants(pg, min(a / 200, pg.transversal.epsilon0), a=a)


def resampled_sup(cert, factor=10):
    step = cert.J.length / 1000 / factor
    xs = np.linspace(cert.J.lo, cert.J.hi, int(math.ceil(cert.J.length / step)) + 1)
    return float(np.max(word_value_and_deriv(cert.word, xs)[1]))


def test_extract_expanding_word_examples():
    w = extract_expanding_word(DOUBLING, 0.0, 4, constants(DOUBLING, 0.5))
    assert w.letters == ("h",) * 4 and w.log_deriv >= 2
    w = extract_expanding_word(IFS, 0.0, 2, constants(IFS, 1.0))
    assert w.letters == ("f^-1", "f^-1")
    assert w.log_deriv == pytest.approx(2 * math.log(4))
    with pytest.raises(NoExpansionFound):
        extract_expanding_word(build("isometric_translation"), 0.0, 2, constants(build("isometric_translation")))


def test_pliss_truncate_constant_ledger():
    c = constants(DOUBLING)
    w = make_word(DOUBLING, 0.0, ["h"] * 4)
    q, t = pliss_truncate(DOUBLING, w, c)
    assert q == 4 and t.letters == w.letters
    q, t = pliss_truncate(DOUBLING, make_word(DOUBLING, 0.0, ["h"]), c)
    assert q == 1 and t.letters == ("h",)


def mixed_pg():
    tv = Transversal(((Interval(0, -1, 1), Interval(0, -1.5, 1.5)),), 0.2)
    h = LocalMap("h", Affine(2, 0), Interval(0, -0.5, 0.5), Interval(0, -0.7, 0.7), 0, "h^-1")
    t = LocalMap("t", Affine(1, 0.05), Interval(0, -0.9, 0.9), Interval(0, -1.1, 1.1), 0, "t^-1")
    return Pseudogroup.from_generators(tv, [h, t])


def test_pliss_truncate_drops_neutral_tail():
    pg = mixed_pg()
    c = constants(pg)
    w = make_word(pg, 0.0, ["h", "t"])
    q, t = pliss_truncate(pg, w, c)
    oracle = find_regular_index([-v for v in w.log_derivs], c.a, c.epsilon1)
    assert q == oracle.q == 1 and t.letters == ("h",)


def test_doubling_certificate():
    c = constants(DOUBLING)
    w = extract_expanding_word(DOUBLING, 0.0, 4, c)
    _, t = pliss_truncate(DOUBLING, w, c)
    cert = certify_contraction(DOUBLING, t, 0.0, c)
    assert cert.word.letters == ("h^-1",) * 4
    assert cert.sup_deriv == pytest.approx(1 / 16, abs=1e-12)
    assert cert.I.length == pytest.approx(cert.J.length / 16, rel=1e-12)
    assert (cert.J.lo, cert.J.hi) == pytest.approx((-4 * c.delta0_prime, 4 * c.delta0_prime))
    assert resampled_sup(cert) <= cert.sup_deriv * (1 + 1e-9)


def test_moebius_expanding_word_certificate():
    # M(x) = 2x/(1+x) expands at 0 with M'(0) = 2; its inverse contracts near 0
    from holonomy.maps import Moebius

    tv = Transversal(((Interval(0, -0.4, 0.9), Interval(0, -1.2, 1.1)),), 0.2)
    m = LocalMap("M", Moebius(2, 0, 1, 1), Interval(0, -0.1, 0.6), Interval(0, -0.3, 0.95), 0, "M^-1")
    pg = Pseudogroup.from_generators(tv, [m])
    c = estimate_constants(pg, 0.0015, a=0.3)
    w = extract_expanding_word(pg, 0.0, 3, c)
    _, t = pliss_truncate(pg, w, c)
    cert = certify_contraction(pg, t, 0.0, c, chain_length=len(w))
    assert cert.sup_deriv <= math.exp((-c.a + 2 * c.epsilon1) * cert.chain_length)
    assert resampled_sup(cert) <= cert.sup_deriv * (1 + 1e-6)


def test_isometric_word_fails_certification():
    pg = build("isometric_translation")
    c = constants(pg)
    with pytest.raises(CertificationFailed):
        certify_contraction(pg, make_word(pg, 0.0, ["t"]), 0.0, c)


def test_banach_fixed_point():
    w = make_word(IFS, 0.5, ["g"])
    assert banach_fixed_point(w, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_fixed_point_doubling():
    c = constants(DOUBLING)
    res = find_hyperbolic_fixed_point(DOUBLING, 0.0, c, mu=0.5)
    assert set(res.Phi.word.letters) == {"h^-1"}
    assert res.Phi.fixed_point == pytest.approx(0.0, abs=1e-12)
    assert res.Phi.sup_deriv < 0.5
    assert res.Phi.residual < 1e-10 and res.Psi.residual < 1e-10
    assert res.Phi.J.contains_in_interior(res.Phi.I, tol=0.0)


def test_fixed_point_ifs():
    c = constants(IFS)
    res = find_hyperbolic_fixed_point(IFS, 0.0, c)
    assert res.Phi.word.letters == ("f",)
    assert res.Phi.fixed_point == pytest.approx(0.0, abs=1e-10)
    assert res.Phi.sup_deriv == pytest.approx(0.25)
    d = 2 * abs(res.Psi.fixed_point - 0.0)
    assert d < c.delta0 / 16


def test_fixed_point_morse_near_p():
    pg = build("morse_smale_suspension")
    c = constants(pg)
    res = find_hyperbolic_fixed_point(pg, 0.25, c)
    assert res.Phi.fixed_point == pytest.approx(0.25, abs=1e-9)
    assert res.Phi.residual < 1e-10
    assert resampled_sup(res.Phi) <= res.Phi.sup_deriv * (1 + 1e-6)


def test_fixed_point_budget_exhausted():
    pg = build("isometric_translation")
    with pytest.raises(BudgetExhausted):
        find_hyperbolic_fixed_point(pg, 0.0, constants(pg), budget=100)


def test_fixed_point_argument_checks():
    c = constants(DOUBLING)
    with pytest.raises(ValueError):
        find_hyperbolic_fixed_point(DOUBLING, 0.0, c, mu=1.5)
    with pytest.raises(ValueError):
        find_hyperbolic_fixed_point(DOUBLING, 0.0, c, delta1=c.delta0)
    with pytest.raises(ValueError):
        extract_expanding_word(DOUBLING, 0.0, 2, AnalysisConstants(0.2, 0.001, 0.001, 2.0, None))


def test_no_hyperbolic_holonomy_report():
    iso = build("isometric_rotation_pair")
    grid = np.linspace(0.05, 0.95, 15)
    assert check_no_hyperbolic_holonomy(iso, grid, constants(iso), depth=6) == []
    rep = check_no_hyperbolic_holonomy(DOUBLING, [0.0], constants(DOUBLING), depth=6)
    assert len(rep) == 1 and rep[0]["certificate"] is not None
