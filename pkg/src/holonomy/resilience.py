"""Ping-pong games, resilient points and a separated-set entropy estimate."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .expansion import AnalysisConstants, BudgetExhausted
from .hyperbolic import (DEFAULT_BUDGET, ContractionCertificate, NoExpansionFound, _image,
                         find_hyperbolic_fixed_point, sampled_sup_deriv)
from .maps import Interval
from .pseudogroup import Pseudogroup, Word, rebase, word_value_and_deriv

DISTINCT_TOL = 1e-9
MAX_POWER = 64
TRACE_TOL = 1e-8
DEFAULT_DENSITY = 64


class TraceEscaped(RuntimeError):
    pass


@dataclass
class PingPongCertificate:
    P: ContractionCertificate
    Q: ContractionCertificate
    J: Interval
    disjointness_gap: float
    powers: tuple
    images: tuple  # (P^m1(J), Q^m2(J))
    seeds: tuple = ()

    def to_dict(self) -> dict:
        return {
            "P": self.P.to_dict(), "Q": self.Q.to_dict(), "J": self.J.to_list(),
            "disjointness_gap": self.disjointness_gap, "powers": list(self.powers),
            "images": [iv.to_list() for iv in self.images], "seeds": list(self.seeds),
        }


@dataclass
class ResilienceCertificate:
    x: float
    y: float
    R: Word
    asymptotic_trace: list = field(default_factory=list)  # (iterate, distance to x)

    @property
    def ratios(self) -> list[float]:
        d = [dist for _, dist in self.asymptotic_trace]
        return [b / a for a, b in zip(d, d[1:]) if a > 0]

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "R": list(self.R.letters),
                "trace": [list(t) for t in self.asymptotic_trace]}


# ---------------------------------------------------------------------------
# Ping-pong detection
# ---------------------------------------------------------------------------


def _power_image(w: Word, iv: Interval, m: int) -> Interval | None:
    lo, hi = iv.lo, iv.hi
    for _ in range(m):
        if not (w.base_domain.contains(lo, tol=0.0) and w.base_domain.contains(hi, tol=0.0)):
            return None
        lo, hi = (float(v) for v in word_value_and_deriv(w, np.array([lo, hi]))[0])
    return Interval.closed(iv.component, lo, hi)


def grow_trap(phi: ContractionCertificate, start: float, samples: int = 1000) -> ContractionCertificate:
    """Enlarge the certified interval of ``phi`` along ``start * 2^k``.

    A radius is kept while ``phi`` is defined on the interval, maps it into
    its interior and has sampled derivative below 1 there.
    """
    w, u = phi.word, phi.fixed_point
    best = phi
    r = start
    while True:
        r *= 2
        J = Interval.closed(phi.J.component, u - r, u + r)
        if not (J.lo > w.base_domain.lo and J.hi < w.base_domain.hi):
            return best
        img = _image(w, J)
        if not J.contains_in_interior(img, tol=0.0):
            return best
        sup, _ = sampled_sup_deriv(w, J, J.length / samples)
        if not sup < 1:
            return best
        best = ContractionCertificate(w, J, img, sup, phi.chain_length, u, phi.predicted_bound, phi.residual)


def _pair(P: ContractionCertificate, Q: ContractionCertificate):
    if P.J.component != Q.J.component or abs(P.fixed_point - Q.fixed_point) <= DISTINCT_TOL:
        return None
    J = P.J.intersect(Q.J)
    if not J or not (J.lo < min(P.fixed_point, Q.fixed_point) and max(P.fixed_point, Q.fixed_point) < J.hi):
        return None
    J = Interval.closed(J.component, J.lo, J.hi)
    images_p = [_power_image(P.word, J, m) for m in range(1, MAX_POWER + 1)]
    images_q = [_power_image(Q.word, J, m) for m in range(1, MAX_POWER + 1)]
    # smallest m1 + m2, then smallest m1
    for total in range(2, 2 * MAX_POWER + 1):
        for m1 in range(max(1, total - MAX_POWER), min(MAX_POWER, total - 1) + 1):
            a, b = images_p[m1 - 1], images_q[total - m1 - 1]
            if a is None or b is None:
                continue
            if not (J.contains_in_interior(a, tol=0.0) and J.contains_in_interior(b, tol=0.0)):
                continue
            gap = max(b.lo - a.hi, a.lo - b.hi)
            if gap > 0:
                return J, gap, (m1, total - m1), (a, b)
    return None


def detect_ping_pong(pg: Pseudogroup, constants: AnalysisConstants, grid=None,
                     budget: int = DEFAULT_BUDGET, density: int = DEFAULT_DENSITY,
                     mu: float = 0.5) -> PingPongCertificate | None:
    """First ping-pong pair in seed order, or ``None``.

    Seeds are visited in grid order; each successful fixed-point search
    yields a contraction whose trapping interval is then enlarged.  A new
    contraction is paired with the earlier ones in order, and the first pair
    with distinct fixed points inside the common interval and disjoint
    power images wins.  ``budget`` is the letter allowance per seed.
    """
    seeds = pg.transversal.seed_grid(density) if grid is None else [
        (pg.transversal.locate(x), float(x)) for x in grid]
    found: list[tuple[int, ContractionCertificate]] = []
    for idx, (_, x) in enumerate(seeds):
        try:
            res = find_hyperbolic_fixed_point(pg, x, constants, mu=mu, budget=budget)
        except (BudgetExhausted, NoExpansionFound):
            continue
        cert = grow_trap(res.Phi, constants.delta0_prime)
        for jdx, other in found:
            pair = _pair(other, cert)
            if pair is not None:
                J, gap, powers, images = pair
                return PingPongCertificate(other, cert, J, gap, powers, images, (jdx, idx))
        found.append((idx, cert))
    return None


def ping_pong_to_resilient(cert: PingPongCertificate, max_iter: int = 10_000) -> ResilienceCertificate:
    """``x`` = fixed point of ``P``; ``y = Q(x)``; iterate ``P`` on ``y`` back to ``x``."""
    P, Q = cert.P, cert.Q
    x = P.fixed_point
    qw = Q.word
    if not qw.base_domain.contains(x, tol=0.0):
        raise TraceEscaped(f"{x} is outside the domain of the second word")
    y = float(word_value_and_deriv(qw, x)[0])
    R = rebase(qw, x)
    trace = []
    z = y
    for _ in range(max_iter):
        if not P.J.contains(z, tol=0.0):
            raise TraceEscaped(f"iterate {z} left the certified interval {P.J}")
        d = abs(z - x)
        trace.append((z, d))
        if d < TRACE_TOL:
            return ResilienceCertificate(x, y, R, trace)
        z = float(word_value_and_deriv(P.word, z)[0])
    raise TraceEscaped("trace did not reach the fixed point")


# ---------------------------------------------------------------------------
# Entropy
# ---------------------------------------------------------------------------


class _SeparatedSet:
    """Greedy left-to-right (n, eps)-separated set on one core component.

    Points ``p < q`` are separated when some reduced word of length ``<= n``
    is defined on ``[p, q]`` and moves them at least ``eps`` apart.  Each new
    point is the smallest candidate separated from the last kept point; it is
    then checked against every kept point within ``eps`` using the prefixes
    of the witness word (each covers a whole interval of kept points by
    monotonicity) and, failing those, an exhaustive bounded search.
    """

    def __init__(self, pg: Pseudogroup, n: int, eps: float, component: int):
        from .expansion import _letters
        self.pg = pg
        self.n = n
        self.eps = eps
        self.comp = component
        self.core = pg.transversal.core(component)
        self.letters = _letters(pg)
        self.by_id = {L.id: L for L in self.letters}
        self.logC = math.log(max(pg.max_deriv, 1.0))
        self.C = max(pg.max_deriv, 1.0)
        self._dom: dict = {(): (self.core.lo, self.core.hi, self.core.lo, self.core.hi, component)}

    # word helpers -------------------------------------------------------

    def _eval(self, letters, x):
        for gid in letters:
            x = self.by_id[gid].value(x)
        return x

    def _inv_eval(self, letters, z):
        for gid in reversed(letters):
            z = self.by_id[self.by_id[gid].inv].value(z)
        return z

    def domain(self, letters):
        """``(lo, hi, img_lo, img_hi, component)`` of the interval where ``letters`` is defined."""
        hit = self._dom.get(letters)
        if hit is not None:
            return hit
        lo, hi, ilo, ihi, c = self.domain(letters[:-1])
        L = self.by_id[letters[-1]]
        if hi <= lo or c != L.src:
            out = (0.0, 0.0, 0.0, 0.0, -1)
        else:
            nlo, nhi = max(ilo, L.lo), min(ihi, L.hi)
            if nhi <= nlo:
                out = (0.0, 0.0, 0.0, 0.0, -1)
            else:
                blo = lo if nlo == ilo else max(lo, float(self._inv_eval(letters[:-1], nlo)))
                bhi = hi if nhi == ihi else min(hi, float(self._inv_eval(letters[:-1], nhi)))
                out = (blo, bhi, float(L.value(nlo)), float(L.value(nhi)), L.dst)
        self._dom[letters] = out
        return out

    # searches ------------------------------------------------------------

    def _try_word(self, letters, k: float, lower: float) -> float | None:
        lo, hi, ilo, ihi, c = self.domain(letters)
        if not lo < k < hi:
            return None
        target = self._eval(letters, k) + self.eps
        if not target < ihi:
            return None
        t = float(self._inv_eval(letters, target))
        if t < lower:
            if not lower < hi:
                return None
            t = lower
        return t

    def next_from(self, k: float, lower: float, hint=None):
        """Smallest ``t >= lower`` (``t > k``) separated from ``k``; ``(t, letters)`` or ``None``.

        ``hint`` is a word tried first to seed the pruning bound.
        """
        eps, n, C = self.eps, self.n, self.C
        best = [math.inf, None]
        if hint is not None:
            t = self._try_word(hint, k, lower)
            if t is not None:
                best = [t, hint]
        path: list[str] = []

        def consider(z, zl, ihi, depth):
            target = z + eps
            if target < ihi:
                t = float(self._inv_eval(path, target))
                if t < lower:
                    if zl is None:
                        return
                    t = lower
                if t < best[0]:
                    best[0], best[1] = t, tuple(path)

        def visit(z, zl, c, ilo, ihi, deriv, depth, last_inv):
            consider(z, zl, ihi, depth)
            if depth == n or best[0] <= lower:
                return
            kids = []
            for L in self.letters:
                if L.id == last_inv or c != L.src or not (L.lo < z < L.hi):
                    continue
                kids.append((L.deriv(z), L))
            kids.sort(key=lambda t: -t[0])
            for d, L in kids:
                nd = deriv * d
                if max(lower, k + eps / (nd * C ** (n - depth - 1))) >= best[0]:
                    continue
                nzl = L.value(zl) if zl is not None and L.lo < zl < L.hi else None
                path.append(L.id)
                visit(L.value(z), nzl, L.dst, L.value(max(ilo, L.lo)), L.value(min(ihi, L.hi)),
                      nd, depth + 1, L.inv)
                path.pop()

        zl0 = lower if lower < self.core.hi else None
        visit(k, zl0, self.comp, self.core.lo, self.core.hi, 1.0, 0, None)
        if best[1] is None or not best[0] < self.core.hi:
            return None
        return best[0], best[1]

    def separating(self, p: float, q: float):
        """Some word defined on ``[p, q]`` moving them ``eps`` apart, else ``None``."""
        eps, n, C = self.eps, self.n, self.C
        path: list[str] = []

        def visit(zp, zq, c, depth, last_inv):
            if zq - zp >= eps:
                return tuple(path)
            if depth == n or (zq - zp) * C ** (n - depth) < eps:
                return None
            for L in self.letters:
                if L.id == last_inv or c != L.src or not (L.lo < zp and zq < L.hi):
                    continue
                path.append(L.id)
                hit = visit(L.value(zp), L.value(zq), L.dst, depth + 1, L.inv)
                path.pop()
                if hit is not None:
                    return hit
            return None

        return visit(p, q, self.comp, 0, None)

    def first_unseparated(self, kept: list, q: float, witness) -> float | None:
        """A kept point within ``eps`` of ``q`` not separated from it, else ``None``."""
        i = len(kept) - 1
        floor = q - self.eps
        wq = None
        while i >= 0 and kept[i] > floor:
            k = kept[i]
            cover = None
            if witness is not None:
                if wq is None:
                    wq = [q]
                    for gid in witness:
                        wq.append(self.by_id[gid].value(wq[-1]))
                for j in range(len(witness), 0, -1):
                    pre = witness[:j]
                    lo = self.domain(pre)[0]
                    if k > lo and wq[j] - self._eval(pre, k) >= self.eps:
                        cover = lo
                        break
            if cover is None:
                if q - k >= self.eps:
                    cover = -math.inf
                else:
                    w = self.separating(k, q)
                    if w is None:
                        return k
                    cover = self.domain(w)[0]
            i = bisect.bisect_right(kept, cover, 0, i) - 1
        return None

    def build(self, start: float | None = None) -> list[float]:
        k0 = self.core.lo + 1e-9 * self.core.length if start is None else start
        kept = [k0]
        witness = None
        while True:
            nxt = self.next_from(kept[-1], kept[-1], witness)
            if nxt is None:
                return kept
            q, witness = nxt
            while True:
                bad = self.first_unseparated(kept, q, witness)
                if bad is None:
                    break
                nxt = self.next_from(bad, q)
                if nxt is None:
                    return kept
                q2, witness = nxt
                q = q2 if q2 > q else math.nextafter(q, math.inf)
            kept.append(q)


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    count: int
    base_count: int
    n: int
    eps: float


def separated_set(pg: Pseudogroup, n: int, eps: float, component: int = 0) -> list[float]:
    """Greedy (n, eps)-separated points of core component ``component``."""
    return _SeparatedSet(pg, n, eps, component).build()


def entropy_estimate(pg: Pseudogroup, n: int, eps: float, component: int = 0) -> EntropyEstimate:
    if n < 1 or not eps > 0:
        raise ValueError("need n >= 1 and eps > 0")
    count = len(separated_set(pg, n, eps, component))
    base = len(separated_set(pg, 0, eps, component))
    return EntropyEstimate(max(0.0, math.log(count / base) / n), count, base, n, eps)


def entropy_lower_estimate(pg: Pseudogroup, n: int, eps: float, component: int = 0) -> float:
    """``ln(s(n, eps) / s(0, eps)) / n`` for greedy separated-set counts ``s``.

    Dividing by the identity-only count removes the ``ln(length/eps)/n``
    offset that any interval carries regardless of the dynamics.
    """
    return entropy_estimate(pg, n, eps, component).value
