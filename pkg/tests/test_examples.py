import math

import pytest

from holonomy import examples
from holonomy.examples import EXAMPLES, MORSE_SMALE_FIXED, UnknownExample, build, names
from holonomy.expansion import lambda_hat
from holonomy.pseudogroup import make_word, word_deriv, word_eval


def test_names():
    assert set(names()) == {"doubling", "isometric_translation", "isometric_rotation_pair", "ifs_ping_pong",
                            "morse_smale_suspension", "moebius_slow"}
    with pytest.raises(UnknownExample):
        build("nope")


@pytest.mark.parametrize("name", names())
def test_build_validates(name):
    pg = build(name)
    pg.validate()
    assert all(pg.inverse(g).inverse_id == g for g in pg.letters)


def test_expected_exponents():
    assert lambda_hat(build("doubling"), 0.0, 6) == pytest.approx(EXAMPLES["doubling"].expected["lambda_hat(0)"][0])
    for name in ("isometric_translation", "isometric_rotation_pair"):
        assert lambda_hat(build(name), 0.37, 6) == EXAMPLES[name].expected["lambda_hat"][0]


@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_moebius_closed_form_composition(n):
    pg = build("moebius_slow")
    x = 0.1
    w = make_word(pg, x, ["m"] * n)
    assert word_eval(w, x) == pytest.approx(x / (n * x + 1), rel=1e-13)
    assert word_deriv(w, x) == pytest.approx(1 / (n * x + 1) ** 2, rel=1e-12)


def test_morse_fixed_points_and_multipliers():
    pg = build("morse_smale_suspension")
    p, q = MORSE_SMALE_FIXED
    assert (p, q) == (0.25, 0.75)
    fa = pg["fa"]
    for point, mult in ((p, 2.0), (q, 0.5)):
        assert float(fa.expr.value(point)) == pytest.approx(point, abs=1e-12)
        assert float(fa.expr.deriv(point)) == pytest.approx(mult, rel=1e-12)


def test_rotation_pair_irrational_angles():
    a, b = examples.ROTATION_ANGLES
    assert a == pytest.approx(math.sqrt(2) - 1) and b == pytest.approx((math.sqrt(5) - 1) / 4)
    pg = build("isometric_rotation_pair")
    # the two pieces of each rotation agree with x + theta mod 1
    x = 0.1
    assert float(pg["ra"].expr.value(x)) == pytest.approx((x + a) % 1)
