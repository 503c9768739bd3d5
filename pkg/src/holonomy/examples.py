"""Built-in pseudogroups with known behaviour."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .maps import Affine, Composite, Hermite, Interval, LocalMap, Moebius
from .pseudogroup import Pseudogroup, Transversal


class UnknownExample(KeyError):
    pass


def _transversal(core, ext, eps0, comp=0) -> Transversal:
    return Transversal(((Interval(comp, *core), Interval(comp, *ext)),), eps0)


def _gen(gid, expr, dom, ext, comp=0) -> LocalMap:
    return LocalMap(gid, expr, Interval(comp, *dom), Interval(comp, *ext), comp, gid + "^-1")


def _rotation_pieces(name: str, theta: float, margin: float) -> list[LocalMap]:
    # rotation of the circle (0,1) by theta, cut at the seam
    cut = 1.0 - theta
    return [
        _gen(name + "a", Affine(1.0, theta), (0.0, cut), (-margin, cut + margin)),
        _gen(name + "b", Affine(1.0, theta - 1.0), (cut, 1.0), (cut - margin, 1.0 + margin)),
    ]


def doubling() -> Pseudogroup:
    tv = _transversal((-1.0, 1.0), (-1.5, 1.5), 0.2)
    return Pseudogroup.from_generators(tv, [_gen("h", Affine(2.0, 0.0), (-0.5, 0.5), (-0.7, 0.7))])


def isometric_translation() -> Pseudogroup:
    tv = _transversal((-1.0, 1.0), (-1.5, 1.5), 0.2)
    return Pseudogroup.from_generators(tv, [_gen("t", Affine(1.0, 0.3), (-1.0, 0.7), (-1.2, 0.9))])


ROTATION_ANGLES = (math.sqrt(2.0) - 1.0, (math.sqrt(5.0) - 1.0) / 4.0)


def isometric_rotation_pair() -> Pseudogroup:
    tv = _transversal((0.0, 1.0), (-0.5, 1.5), 0.2)
    gens = _rotation_pieces("r", ROTATION_ANGLES[0], 0.2) + _rotation_pieces("s", ROTATION_ANGLES[1], 0.2)
    return Pseudogroup.from_generators(tv, gens)


def ifs_ping_pong() -> Pseudogroup:
    tv = _transversal((-2.0, 3.0), (-2.5, 3.5), 0.1)
    return Pseudogroup.from_generators(tv, [
        _gen("f", Affine(0.25, 0.0), (-2.0, 3.0), (-2.4, 3.4)),
        _gen("g", Affine(0.25, 0.75), (-2.0, 3.0), (-2.4, 3.4)),
    ])


def moebius_slow() -> Pseudogroup:
    tv = _transversal((-0.5, 0.5), (-0.7, 0.7), 0.04)
    return Pseudogroup.from_generators(tv, [_gen("m", Moebius(1.0, 0.0, 1.0, 1.0), (-1 / 3, 0.5), (-0.4, 0.6))])


MORSE_SMALE_FIXED = (0.25, 0.75)  # multipliers 2 and 1/2


def morse_smale_lift() -> Hermite:
    """Lift of a circle map fixing 0.25 (slope 2) and 0.75 (slope 1/2)."""
    knots = [-0.25, 0.25, 0.75, 1.25, 1.75]
    slopes = [0.5, 2.0, 0.5, 2.0, 0.5]
    return Hermite(knots, knots, slopes)


def morse_smale_suspension() -> Pseudogroup:
    margin = 0.05
    tv = _transversal((0.0, 1.0), (-0.5, 1.5), margin)
    lift = morse_smale_lift()
    zero = float(lift.inverse().value(0.0))  # lift(zero) = 0, zero lies in (0, 0.25)
    gens = [
        _gen("fa", lift, (zero, 1.0), (zero - 2 * margin, 1.0 + 2 * margin)),
        _gen("fb", Composite([lift, Affine(1.0, 1.0)]), (0.0, zero), (-2 * margin, zero + 2 * margin)),
    ]
    gens += _rotation_pieces("r", ROTATION_ANGLES[0], margin)
    return Pseudogroup.from_generators(tv, gens)


@dataclass(frozen=True)
class ExampleSpec:
    name: str
    builder: Callable[[], Pseudogroup]
    description: str
    expected: dict = field(default_factory=dict)


EXAMPLES = {
    entry.name: entry for entry in [
        ExampleSpec("doubling", doubling, "x -> 2x on (-0.5, 0.5)",
                    {"lambda_hat(0)": (math.log(2.0), "affine slope")}),
        ExampleSpec("isometric_translation", isometric_translation, "x -> x + 0.3 on (-1, 0.7)",
                    {"lambda_hat": (0.0, "all derivatives equal 1")}),
        ExampleSpec("isometric_rotation_pair", isometric_rotation_pair,
                    "two incommensurate rotations of the circle (0,1), each cut into two pieces",
                    {"lambda_hat": (0.0, "all derivatives equal 1")}),
        ExampleSpec("ifs_ping_pong", ifs_ping_pong, "x -> x/4 and x -> (x+3)/4 on (-2, 3)",
                    {"ping_pong_u": (0.0, "fixed point of x/4"), "ping_pong_v": (1.0, "fixed point of (x+3)/4")}),
        ExampleSpec("morse_smale_suspension", morse_smale_suspension,
                    "circle map with fixed points 0.25 (multiplier 2) and 0.75 (multiplier 1/2), plus a rotation",
                    {"fixed_points": (MORSE_SMALE_FIXED, "knots of the lift")}),
        ExampleSpec("moebius_slow", moebius_slow, "parabolic x -> x/(x+1)",
                    {"mu_n growth": ("polynomial", "n-fold composition x/(nx+1)")}),
    ]
}


def names() -> list[str]:
    return list(EXAMPLES)


def build(name: str) -> Pseudogroup:
    try:
        return EXAMPLES[name].builder()
    except KeyError:
        raise UnknownExample(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}") from None
