"""Local one-dimensional C^1 maps.

A :class:`LocalMap` is one generator of a pseudogroup: an orientation
preserving diffeomorphism between open subintervals of transversal
components, together with an extension to a slightly larger interval.
The formula itself lives in a :class:`MapExpr`; four families are
supported (affine, Moebius, compositions of these, and C^1 cubic Hermite
interpolants).  All expressions evaluate on floats or numpy arrays.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

TOL = 1e-12


class OutOfDomain(ValueError):
    """Point outside the (extended) domain of a map or word."""


class InvalidMap(ValueError):
    """Map data violating an orientation or monotonicity requirement."""


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------


class _Empty:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY"

    def __bool__(self):
        return False

    @property
    def length(self) -> float:
        return 0.0

    def contains(self, x, tol: float = TOL) -> bool:
        return False


EMPTY = _Empty()


@dataclass(frozen=True)
class Interval:
    """Interval ``(lo, hi)`` inside transversal component ``component``.

    Endpoints are open unless the matching ``closed_*`` flag is set.  The
    empty interval is the singleton :data:`EMPTY`, never an ``Interval``.
    """

    component: int
    lo: float
    hi: float
    closed_lo: bool = False
    closed_hi: bool = False

    def __post_init__(self):
        if not self.lo <= self.hi + TOL:
            raise ValueError(f"interval with lo > hi: [{self.lo}, {self.hi}]")

    @classmethod
    def closed(cls, component: int, lo: float, hi: float) -> "Interval":
        return cls(component, lo, hi, True, True)

    @classmethod
    def make(cls, component, lo, hi, closed_lo=False, closed_hi=False):
        """Like the constructor, but returns EMPTY for degenerate input."""
        if hi < lo or (hi <= lo and not (closed_lo and closed_hi)):
            return EMPTY
        return cls(component, float(lo), float(hi), closed_lo, closed_hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, tol: float = TOL):
        """Membership with absolute tolerance ``tol``.

        Open endpoints exclude points within ``tol`` of them; closed
        endpoints admit points up to ``tol`` outside.  Works elementwise on
        arrays.
        """
        x = np.asarray(x, dtype=float)
        lo_ok = x >= self.lo - tol if self.closed_lo else x > self.lo + tol
        hi_ok = x <= self.hi + tol if self.closed_hi else x < self.hi - tol
        out = lo_ok & hi_ok
        return bool(out) if out.ndim == 0 else out

    def contains_interval(self, other, tol: float = TOL) -> bool:
        if other is EMPTY:
            return True
        if other.component != self.component:
            return False
        lo_ok = other.lo >= self.lo - tol if (self.closed_lo or not other.closed_lo) else other.lo > self.lo + tol
        hi_ok = other.hi <= self.hi + tol if (self.closed_hi or not other.closed_hi) else other.hi < self.hi - tol
        return bool(lo_ok and hi_ok)

    def contains_in_interior(self, other, tol: float = TOL) -> bool:
        if other is EMPTY:
            return True
        return (other.component == self.component
                and other.lo > self.lo + tol and other.hi < self.hi - tol)

    def intersect(self, other):
        if other is EMPTY or other.component != self.component:
            return EMPTY
        if self.lo > other.lo:
            lo, clo = self.lo, self.closed_lo
        elif other.lo > self.lo:
            lo, clo = other.lo, other.closed_lo
        else:
            lo, clo = self.lo, self.closed_lo and other.closed_lo
        if self.hi < other.hi:
            hi, chi = self.hi, self.closed_hi
        elif other.hi < self.hi:
            hi, chi = other.hi, other.closed_hi
        else:
            hi, chi = self.hi, self.closed_hi and other.closed_hi
        return Interval.make(self.component, lo, hi, clo, chi)

    def thicken(self, r: float, closed: bool = True) -> "Interval":
        return Interval(self.component, self.lo - r, self.hi + r, closed, closed)

    def grid(self, n: int) -> np.ndarray:
        """``n`` equispaced points; open ends are stepped in by ``TOL``."""
        lo = self.lo if self.closed_lo else self.lo + 4 * TOL
        hi = self.hi if self.closed_hi else self.hi - 4 * TOL
        return np.linspace(lo, hi, n)

    def to_list(self) -> list:
        return [self.lo, self.hi]

    def __repr__(self):
        lb = "[" if self.closed_lo else "("
        rb = "]" if self.closed_hi else ")"
        return f"{lb}{self.lo:.12g}, {self.hi:.12g}{rb}@{self.component}"


# ---------------------------------------------------------------------------
# Map expressions
# ---------------------------------------------------------------------------


class MapExpr:
    """Base class; subclasses are immutable."""

    kind = ""

    def value(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def inverse(self) -> "MapExpr":
        raise NotImplementedError

    def deriv_range(self, lo: float, hi: float) -> tuple[float, float]:
        """Lower and upper bounds of the derivative on ``[lo, hi]``."""
        xs = np.linspace(lo, hi, 2001)
        d = self.deriv(xs)
        return float(d.min()), float(d.max())

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)


@dataclass(frozen=True)
class Affine(MapExpr):
    slope: float
    offset: float = 0.0
    kind = "affine"

    def __post_init__(self):
        if not self.slope > 0:
            raise InvalidMap("orientation: affine slope must be positive")

    def value(self, x):
        return self.slope * x + self.offset

    def deriv(self, x):
        if isinstance(x, np.ndarray):
            return np.full(x.shape, self.slope)
        return self.slope

    def inverse(self):
        return Affine(1.0 / self.slope, -self.offset / self.slope)

    def deriv_range(self, lo, hi):
        return self.slope, self.slope

    def to_dict(self):
        return {"kind": self.kind, "slope": self.slope, "offset": self.offset}


@dataclass(frozen=True)
class Moebius(MapExpr):
    """``x -> (a x + b) / (c x + d)`` with ``ad - bc > 0``."""

    a: float
    b: float
    c: float
    d: float
    kind = "moebius"

    def __post_init__(self):
        if not self.a * self.d - self.b * self.c > 0:
            raise InvalidMap("orientation: Moebius map needs ad - bc > 0")

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def pole(self):
        return None if self.c == 0 else -self.d / self.c

    def value(self, x):
        return (self.a * x + self.b) / (self.c * x + self.d)

    def deriv(self, x):
        return self.det / (self.c * x + self.d) ** 2

    def inverse(self):
        return Moebius(self.d, -self.b, -self.c, self.a)

    def deriv_range(self, lo, hi):
        # monotone on any interval avoiding the pole
        d1, d2 = self.deriv(lo), self.deriv(hi)
        return min(d1, d2), max(d1, d2)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "c": self.c, "d": self.d}


@dataclass(frozen=True)
class Composite(MapExpr):
    """Composition applying ``parts[0]`` first."""

    parts: tuple
    kind = "composite"

    def __init__(self, parts: Sequence[MapExpr]):
        object.__setattr__(self, "parts", tuple(parts))

    def value(self, x):
        for p in self.parts:
            x = p.value(x)
        return x

    def deriv(self, x):
        d = 1.0
        for p in self.parts:
            d = d * p.deriv(x)
            x = p.value(x)
        return d

    def inverse(self):
        return Composite([p.inverse() for p in reversed(self.parts)])

    def deriv_range(self, lo, hi):
        dmin, dmax = 1.0, 1.0
        for p in self.parts:
            a, b = p.deriv_range(lo, hi)
            dmin, dmax = dmin * a, dmax * b
            lo, hi = p.value(lo), p.value(hi)
        return dmin, dmax

    def to_dict(self):
        return {"kind": self.kind, "parts": [p.to_dict() for p in self.parts]}


class Hermite(MapExpr):
    """C^1 piecewise cubic Hermite interpolant through ``(knot, value, slope)``."""

    kind = "hermite"
    GRID = 1e-3

    def __init__(self, knots, values, derivs):
        self.knots = tuple(float(k) for k in knots)
        self.values = tuple(float(v) for v in values)
        self.derivs = tuple(float(s) for s in derivs)
        if len(self.knots) < 2 or not (len(self.knots) == len(self.values) == len(self.derivs)):
            raise InvalidMap("hermite: need at least two knots with matching data")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise InvalidMap("hermite: knots must increase")
        if min(self.derivs) <= 0:
            raise InvalidMap("orientation: hermite slopes must be positive at every knot")
        self._spline = CubicHermiteSpline(self.knots, self.values, self.derivs, extrapolate=False)
        self._dspline = self._spline.derivative()
        xs = np.arange(self.knots[0], self.knots[-1] + self.GRID, self.GRID)
        xs = np.clip(xs, self.knots[0], self.knots[-1])
        if not np.all(self._dspline(xs) > 0):
            raise InvalidMap("orientation: hermite derivative not positive on the sampling grid")

    def __eq__(self, other):
        return isinstance(other, Hermite) and (self.knots, self.values, self.derivs) == (
            other.knots, other.values, other.derivs)

    def __hash__(self):
        return hash((self.knots, self.values, self.derivs))

    def __repr__(self):
        return f"Hermite(knots={self.knots}, values={self.values}, derivs={self.derivs})"

    def _check(self, x):
        xa = np.asarray(x)
        if np.any(xa < self.knots[0] - TOL) or np.any(xa > self.knots[-1] + TOL):
            raise OutOfDomain(f"hermite evaluated outside knot range at {x}")
        return np.clip(xa, self.knots[0], self.knots[-1])

    def _cell(self, x: float):
        """Scalar path: ``(t, h, i)`` with ``x = knots[i] + t h``."""
        k = self.knots
        if x < k[0] - TOL or x > k[-1] + TOL:
            raise OutOfDomain(f"hermite evaluated outside knot range at {x}")
        x = min(max(x, k[0]), k[-1])
        i = min(max(bisect.bisect_right(k, x) - 1, 0), len(k) - 2)
        h = k[i + 1] - k[i]
        return (x - k[i]) / h, h, i

    def value(self, x):
        if isinstance(x, float):
            t, h, i = self._cell(x)
            y0, y1 = self.values[i], self.values[i + 1]
            m0, m1 = self.derivs[i] * h, self.derivs[i + 1] * h
            t2, t3 = t * t, t * t * t
            return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1
                    + (t3 - t2) * m1)
        out = self._spline(self._check(x))
        return float(out) if np.ndim(x) == 0 else out

    def deriv(self, x):
        if isinstance(x, float):
            t, h, i = self._cell(x)
            y0, y1 = self.values[i], self.values[i + 1]
            m0, m1 = self.derivs[i] * h, self.derivs[i + 1] * h
            t2 = t * t
            return ((6 * t2 - 6 * t) * (y0 - y1) + (3 * t2 - 4 * t + 1) * m0 + (3 * t2 - 2 * t) * m1) / h
        out = self._dspline(self._check(x))
        return float(out) if np.ndim(x) == 0 else out

    def solve(self, y: float) -> float:
        """Scalar inverse by safeguarded Newton inside the knot cell holding ``y``."""
        v = self.values
        if y < v[0] - TOL or y > v[-1] + TOL:
            raise OutOfDomain(f"inverse evaluated outside [{v[0]}, {v[-1]}]")
        y = min(max(y, v[0]), v[-1])
        i = min(max(bisect.bisect_right(v, y) - 1, 0), len(v) - 2)
        lo, hi = self.knots[i], self.knots[i + 1]
        x = lo + (y - v[i]) * (hi - lo) / (v[i + 1] - v[i])
        for _ in range(100):
            r = self.value(x) - y
            if r < 0:
                lo = x
            elif r > 0:
                hi = x
            else:
                return x
            xn = x - r / self.deriv(x)
            if not lo < xn < hi:
                xn = 0.5 * (lo + hi)
            if abs(xn - x) <= 1e-16 * max(1.0, abs(x)) or hi - lo < 1e-15:
                return xn
            x = xn
        return x

    def inverse(self):
        return NumericInverse(self, self.values[0], self.values[-1])

    def deriv_range(self, lo, hi):
        # the derivative is quadratic on each cell: check ends and vertices
        lo, hi = max(lo, self.knots[0]), min(hi, self.knots[-1])
        cand = [lo, hi] + [k for k in self.knots if lo < k < hi]
        dd = self._dspline.derivative()
        for root in dd.roots(extrapolate=False):
            if lo < root < hi:
                cand.append(float(root))
        d = self.deriv(np.array(cand))
        return float(d.min()), float(d.max())

    def to_dict(self):
        return {"kind": self.kind, "knots": list(self.knots), "values": list(self.values),
                "derivs": list(self.derivs)}


class NumericInverse(MapExpr):
    """Inverse of a monotone expression, solved by safeguarded Newton."""

    kind = "inverse"

    def __init__(self, forward: MapExpr, lo: float, hi: float):
        self.forward = forward
        self.lo = float(lo)  # range of the inverse, i.e. image window of forward
        self.hi = float(hi)
        self._xlo = None

    def __eq__(self, other):
        return isinstance(other, NumericInverse) and self.forward == other.forward

    def __hash__(self):
        return hash(("inv", self.forward))

    def __repr__(self):
        return f"NumericInverse({self.forward!r})"

    def _bracket(self):
        if self._xlo is None:
            f = self.forward
            if isinstance(f, Hermite):
                self._xlo, self._xhi = f.knots[0], f.knots[-1]
            else:
                raise InvalidMap("numeric inverse needs a bounded forward expression")
        return self._xlo, self._xhi

    def value(self, y):
        if isinstance(y, float) and isinstance(self.forward, Hermite):
            return self.forward.solve(y)
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        a, b = self._bracket()
        f = self.forward
        fa, fb = f.value(a), f.value(b)
        if np.any(y < fa - TOL) or np.any(y > fb + TOL):
            raise OutOfDomain(f"inverse evaluated outside [{fa}, {fb}]")
        lo = np.full(y.shape, a)
        hi = np.full(y.shape, b)
        # linear guess on the secant, then Newton kept inside the bracket
        x = a + (np.clip(y, fa, fb) - fa) * (b - a) / (fb - fa)
        for _ in range(100):
            r = f.value(x) - y
            lo = np.where(r < 0, x, lo)
            hi = np.where(r > 0, x, hi)
            step = r / f.deriv(x)
            xn = x - step
            bad = (xn <= lo) | (xn >= hi)
            xn = np.where(bad, 0.5 * (lo + hi), xn)
            done = np.abs(xn - x) <= 1e-15 * max(1.0, abs(a), abs(b))
            x = xn
            if np.all(done | (hi - lo < 1e-15)):
                break
        return float(x[0]) if scalar else x

    def deriv(self, y):
        return 1.0 / self.forward.deriv(self.value(y))

    def inverse(self):
        return self.forward

    def deriv_range(self, lo, hi):
        a, b = self.forward.deriv_range(self.value(lo), self.value(hi))
        return 1.0 / b, 1.0 / a

    def to_dict(self):
        return {"kind": self.kind, "forward": self.forward.to_dict()}


def expr_from_dict(d: dict) -> MapExpr:
    kind = d.get("kind")
    if kind == "affine":
        return Affine(float(d["slope"]), float(d.get("offset", 0.0)))
    if kind == "moebius":
        return Moebius(*(float(d[k]) for k in "abcd"))
    if kind == "composite":
        return Composite([expr_from_dict(p) for p in d["parts"]])
    if kind == "hermite":
        return Hermite(d["knots"], d["values"], d["derivs"])
    if kind == "inverse":
        fwd = expr_from_dict(d["forward"])
        return fwd.inverse()
    raise KeyError(f"unknown map kind {kind!r}")


# ---------------------------------------------------------------------------
# Local maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalMap:
    """One pseudogroup generator ``domain -> target component``."""

    id: str
    expr: MapExpr
    domain: Interval
    extended_domain: Interval
    target_component: int
    inverse_id: str
    _bounds: tuple = field(default=None, compare=False, repr=False)

    @property
    def source_component(self) -> int:
        return self.domain.component

    @property
    def is_identity(self) -> bool:
        return isinstance(self.expr, Affine) and self.expr.slope == 1.0 and self.expr.offset == 0.0 \
            and self.source_component == self.target_component

    def __call__(self, x):
        if not np.all(self.extended_domain.contains(x)):
            raise OutOfDomain(f"{self.id}: {x} outside extended domain {self.extended_domain}")
        return self.expr.value(x)

    def deriv(self, x):
        if not np.all(self.extended_domain.contains(x)):
            raise OutOfDomain(f"{self.id}: {x} outside extended domain {self.extended_domain}")
        return self.expr.deriv(x)

    def image(self, iv: Interval) -> Interval:
        return Interval(self.target_component, float(self.expr.value(iv.lo)),
                        float(self.expr.value(iv.hi)), iv.closed_lo, iv.closed_hi)

    def deriv_bounds(self) -> tuple[float, float]:
        """Derivative bounds over the core domain (cached)."""
        if self._bounds is None:
            object.__setattr__(self, "_bounds", self.expr.deriv_range(self.domain.lo, self.domain.hi))
        return self._bounds


def eval_map(m: LocalMap, x):
    return m(x)


def deriv(m: LocalMap, x):
    return m.deriv(x)


def invert(m: LocalMap) -> LocalMap:
    """The inverse generator, with domains the images of ``m``'s domains."""
    return LocalMap(
        id=m.inverse_id,
        expr=m.expr.inverse(),
        domain=m.image(m.domain),
        extended_domain=m.image(m.extended_domain),
        target_component=m.source_component,
        inverse_id=m.id,
    )


def log_deriv_lipschitz(expr: MapExpr, lo: float, hi: float, npts: int = 1001) -> float:
    """Grid estimate of the Lipschitz constant of ``log expr'`` on ``[lo, hi]``."""
    xs = np.linspace(lo, hi, npts)
    ld = np.log(expr.deriv(xs))
    if not np.all(np.isfinite(ld)):
        return math.inf
    return float(np.max(np.abs(np.diff(ld)) / np.diff(xs)))
