"""Finitely generated pseudogroups acting on a one-dimensional transversal.

Words play the role of plaque chains.  A :class:`Word` stores its letters,
the generator maps, a basepoint and the connected domain around the
basepoint on which every prefix is defined, plus the ledger of forward
log-derivatives along the orbit of the basepoint.

Length convention: the empty word has length 0 and corresponds to a chain
consisting of a single plaque; a word of ``k`` letters is a chain with
``k`` transitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .maps import EMPTY, TOL, Interval, LocalMap, OutOfDomain, invert


class EmptyComposition(ValueError):
    """The current endpoint of a word is not in the next generator's domain."""


class ValidationError(ValueError):
    """Pseudogroup data violating a named invariant."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {detail}" if detail else invariant)


ORBIT_TOL = 1e-10


@dataclass(frozen=True)
class Transversal:
    """Components ``(core, extended)`` with a uniform extension margin."""

    components: tuple
    epsilon0: float

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(tuple(c) for c in self.components))
        if not self.epsilon0 > 0:
            raise ValidationError("extension margin", "epsilon0 must be positive")
        for idx, (core, ext) in enumerate(self.components):
            if core.component != idx or ext.component != idx:
                raise ValidationError("component index", f"component {idx} mislabelled")
            if not (core.lo - ext.lo >= self.epsilon0 - TOL and ext.hi - core.hi >= self.epsilon0 - TOL):
                raise ValidationError("extension margin",
                                      f"component {idx}: core {core} not inside {ext} with margin {self.epsilon0}")

    def core(self, alpha: int) -> Interval:
        return self.components[alpha][0]

    def extended(self, alpha: int) -> Interval:
        return self.components[alpha][1]

    def __len__(self):
        return len(self.components)

    def locate(self, x: float) -> int:
        """Index of the first core component containing ``x``."""
        for idx, (core, _) in enumerate(self.components):
            if core.contains(x):
                return idx
        raise OutOfDomain(f"{x} lies in no core component")

    def seed_grid(self, density: int = 64, component: int | None = None) -> list[tuple[int, float]]:
        """Interior nodes of ``density + 1`` equal cells of each core component."""
        out = []
        comps = range(len(self)) if component is None else [component]
        for idx in comps:
            core = self.core(idx)
            for x in np.linspace(core.lo, core.hi, density + 2)[1:-1]:
                out.append((idx, float(x)))
        return out


class Pseudogroup:
    """Generators closed under inversion, with per-component identities."""

    def __init__(self, transversal: Transversal, generators: Sequence[LocalMap], validate: bool = True):
        self.transversal = transversal
        self.generators = tuple(generators)
        self._by_id = {g.id: g for g in self.generators}
        if len(self._by_id) != len(self.generators):
            raise ValidationError("unique ids", "duplicate generator id")
        self._index = {g.id: i for i, g in enumerate(self.generators)}
        if validate:
            self.validate()
        self.letters = tuple(g.id for g in self.generators if not g.is_identity)
        self._c0 = None

    def __getitem__(self, gid: str) -> LocalMap:
        try:
            return self._by_id[gid]
        except KeyError:
            raise KeyError(f"unknown generator {gid!r}") from None

    def __contains__(self, gid):
        return gid in self._by_id

    def index(self, gid: str) -> int:
        return self._index[gid]

    def inverse(self, gid: str) -> LocalMap:
        return self._by_id[self._by_id[gid].inverse_id]

    @property
    def max_deriv(self) -> float:
        """Upper bound of every non-identity generator's derivative on its domain."""
        if self._c0 is None:
            bounds = [self[g].deriv_bounds()[1] for g in self.letters]
            self._c0 = max(bounds, default=1.0)
        return self._c0

    # -- validation ---------------------------------------------------------

    def validate(self, samples: int = 101) -> None:
        tv = self.transversal
        comps = set(range(len(tv)))
        for g in self.generators:
            if g.source_component not in comps or g.target_component not in comps:
                raise ValidationError("component index", f"{g.id} refers to a missing component")
            if g.extended_domain.component != g.source_component:
                raise ValidationError("component index", f"{g.id}: extended domain on another component")
            d, e = g.domain, g.extended_domain
            amb = tv.extended(g.source_component)
            need_lo = min(tv.epsilon0, d.lo - amb.lo)
            need_hi = min(tv.epsilon0, amb.hi - d.hi)
            if not (d.lo - e.lo >= need_lo - 1e-9 and e.hi - d.hi >= need_hi - 1e-9) or not (
                    e.lo <= d.lo and d.hi <= e.hi):
                raise ValidationError("extension margin", f"{g.id}: domain {d} vs extended {e}")
            if not amb.contains_interval(e):
                raise ValidationError("extension margin", f"{g.id}: extended domain leaves the transversal")
            xs = e.grid(samples)
            der = g.expr.deriv(xs)
            if not np.all(np.isfinite(der)) or not np.all(der > 0):
                raise ValidationError("orientation", f"{g.id}: derivative not positive on extended domain")
            img = g.image(e)
            if not tv.extended(g.target_component).contains_interval(img, tol=1e-9):
                raise ValidationError("extension margin", f"{g.id}: image {img} leaves target extension")
            if not tv.core(g.target_component).contains_interval(g.image(d), tol=1e-9):
                raise ValidationError("extension margin", f"{g.id}: image of domain leaves the core")
            if g.inverse_id not in self._by_id:
                raise ValidationError("inverse closure", f"{g.id}: inverse {g.inverse_id!r} missing")
            inv = self._by_id[g.inverse_id]
            if inv.inverse_id != g.id:
                raise ValidationError("inverse closure", f"{g.id} and {inv.id} are not mutual inverses")
            xs = d.grid(samples)
            back = inv.expr.value(g.expr.value(xs))
            if np.max(np.abs(back - xs)) > 1e-9:
                raise ValidationError("inverse closure", f"{inv.id} does not invert {g.id}")
        for alpha in comps:
            if not any(g.is_identity and g.source_component == alpha for g in self.generators):
                raise ValidationError("identity", f"component {alpha} lacks an identity generator")

    # -- convenience -------------------------------------------------------

    @classmethod
    def from_generators(cls, transversal: Transversal, maps: Sequence[LocalMap]) -> "Pseudogroup":
        """Close ``maps`` under inversion and add per-component identities."""
        gens = list(maps)
        ids = {g.id for g in gens}
        for g in list(gens):
            if g.inverse_id not in ids:
                gens.append(invert(g))
                ids.add(g.inverse_id)
        for alpha in range(len(transversal)):
            if not any(g.is_identity and g.source_component == alpha for g in gens):
                from .maps import Affine
                gid = f"id{alpha}"
                core, ext = transversal.components[alpha]
                gens.insert(alpha, LocalMap(gid, Affine(1.0, 0.0), core, ext, alpha, gid))
        return cls(transversal, gens)


# ---------------------------------------------------------------------------
# Words
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Word:
    """A reduced or unreduced word of generators applied right to left in time order.

    ``letters[0]`` is applied first.  ``base_domain`` is the maximal open
    interval around ``basepoint`` on which all prefixes are defined.
    """

    letters: tuple
    basepoint: float
    base_domain: Interval
    log_derivs: tuple
    maps: tuple = field(repr=False)
    inverse_maps: tuple = field(repr=False)
    endpoint: float = None
    image: Interval = field(default=None, repr=False)
    core: Interval = field(default=None, repr=False)  # core component of the basepoint

    def __len__(self):
        return len(self.letters)

    @property
    def component(self) -> int:
        return self.image.component

    @property
    def source_component(self) -> int:
        return self.base_domain.component

    @property
    def log_deriv(self) -> float:
        return math.fsum(self.log_derivs)

    def __call__(self, y):
        return word_eval(self, y)

    def deriv(self, y):
        return word_deriv(self, y)

    def inverse_value(self, z):
        """Preimage of ``z`` (a point of the image) under the word."""
        for m in reversed(self.inverse_maps):
            z = m.expr.value(z)
        return z

    def __str__(self):
        return "·".join(self.letters) if self.letters else "ε"


def identity_word(pg: Pseudogroup, x: float, component: int | None = None) -> Word:
    alpha = pg.transversal.locate(x) if component is None else component
    core = pg.transversal.core(alpha)
    if not core.contains(x):
        raise OutOfDomain(f"{x} not in core component {alpha}")
    return Word((), float(x), core, (), (), (), float(x), core, core)


def compose(pg: Pseudogroup, w: Word, gid: str) -> Word:
    """Append generator ``gid`` to ``w`` (apply it after ``w``)."""
    return _extend(w, pg[gid], pg.inverse(gid))


def _extend(w: Word, g, ginv) -> Word:
    y = w.endpoint
    if g.source_component != w.component or not g.domain.contains(y):
        raise EmptyComposition(f"endpoint {y} of {w} not in domain {g.domain} of {g.id}")
    inter = w.image.intersect(g.domain)
    if inter is EMPTY:
        raise EmptyComposition(f"image of {w} misses domain of {g.id}")
    # pull the new window back to the base; reuse exact endpoints when unchanged
    lo = w.base_domain.lo if inter.lo == w.image.lo else w.inverse_value(inter.lo)
    hi = w.base_domain.hi if inter.hi == w.image.hi else w.inverse_value(inter.hi)
    lo, hi = max(lo, w.base_domain.lo), min(hi, w.base_domain.hi)
    base = Interval(w.base_domain.component, float(lo), float(hi))
    image = Interval(g.target_component, float(g.expr.value(inter.lo)), float(g.expr.value(inter.hi)))
    return Word(
        letters=w.letters + (g.id,),
        basepoint=w.basepoint,
        base_domain=base,
        log_derivs=w.log_derivs + (math.log(g.expr.deriv(y)),),
        maps=w.maps + (g,),
        inverse_maps=w.inverse_maps + (ginv,),
        endpoint=float(g.expr.value(y)),
        image=image,
        core=w.core,
    )


def rebase(w: Word, x: float) -> Word:
    """The same letters as ``w`` tracked from a new basepoint ``x``."""
    if not w.core.contains(x):
        raise OutOfDomain(f"{x} not in core component {w.core.component}")
    out = Word((), float(x), w.core, (), (), (), float(x), w.core, w.core)
    for g, ginv in zip(w.maps, w.inverse_maps):
        out = _extend(out, g, ginv)
    return out


def make_word(pg: Pseudogroup, x: float, letters: Sequence[str], component: int | None = None) -> Word:
    w = identity_word(pg, x, component)
    for gid in letters:
        w = compose(pg, w, gid)
    return w


def word_eval(w: Word, y):
    if not np.all(w.base_domain.contains(y, tol=0.0)):
        raise OutOfDomain(f"{y} outside domain {w.base_domain} of word {w}")
    for m in w.maps:
        y = m.expr.value(y)
    return y


def word_deriv(w: Word, y):
    if not np.all(w.base_domain.contains(y, tol=0.0)):
        raise OutOfDomain(f"{y} outside domain {w.base_domain} of word {w}")
    d = 1.0
    for m in w.maps:
        d = d * m.expr.deriv(y)
        y = m.expr.value(y)
    return d


def word_value_and_deriv(w: Word, y):
    """Value and derivative in one pass, without the domain check."""
    d = 1.0
    for m in w.maps:
        d = d * m.expr.deriv(y)
        y = m.expr.value(y)
    return y, d


def reduce_letters(pg: Pseudogroup, letters: Sequence[str]) -> tuple:
    """Free reduction: cancel adjacent ``g g^-1`` pairs and drop identities."""
    out: list[str] = []
    for gid in letters:
        if pg[gid].is_identity:
            continue
        if out and pg[out[-1]].inverse_id == gid:
            out.pop()
        else:
            out.append(gid)
    return tuple(out)


def inverse_letters(pg: Pseudogroup, letters: Sequence[str]) -> tuple:
    return tuple(pg[g].inverse_id for g in reversed(letters))


def _children(pg: Pseudogroup, w: Word) -> Iterator[Word]:
    last_inv = pg[w.letters[-1]].inverse_id if w.letters else None
    for gid in pg.letters:
        if gid == last_inv:
            continue
        g = pg[gid]
        if g.source_component == w.component and g.domain.contains(w.endpoint):
            yield compose(pg, w, gid)


def enumerate_words(pg: Pseudogroup, x: float, n: int, component: int | None = None) -> Iterator[Word]:
    """All freely reduced words of length <= n defined at ``x``, shortlex order.

    Identity generators never appear as letters.
    """
    level = [identity_word(pg, x, component)]
    yield level[0]
    for _ in range(n):
        nxt = []
        for w in level:
            for c in _children(pg, w):
                nxt.append(c)
                yield c
        level = nxt
        if not level:
            return


def orbit(pg: Pseudogroup, x: float, n: int, tol: float = ORBIT_TOL) -> list[float]:
    """Deduplicated images of ``x`` under words of length <= n (sorted)."""
    pts = sorted(w.endpoint for w in enumerate_words(pg, x, n))
    out: list[float] = []
    for p in pts:
        if not out or p - out[-1] > tol:
            out.append(p)
    return out
