"""Maximal n-expansion, exponent estimates, uniform constants and the tempered gauge.

``mu_n(x)`` is the largest derivative at ``x`` over freely reduced words of
length at most ``n`` that are defined at ``x``.  It is computed by a
depth-first branch and bound: with ``C`` the largest derivative any
generator attains on its domain, a node whose log-derivative plus
``remaining * ln C`` cannot beat the incumbent is dropped.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .maps import TOL, Interval, log_deriv_lipschitz
from .pseudogroup import Pseudogroup, Word, make_word

DEFAULT_DEPTH = 12
SCORE_TOL = 1e-12


class DegenerateGenerator(ValueError):
    """A generator derivative is zero, infinite or NaN on a sampling grid."""


class Divergent(ArithmeticError):
    """The tempered sum fails the ratio test at this point."""


class BudgetExhausted(RuntimeError):
    """A search used up its allowance of composed letters."""


class Budget:
    """Counter of composed letters shared by the searches of one task."""

    def __init__(self, letters: int | None):
        self.limit = letters
        self.used = 0

    def spend(self, k: int = 1) -> None:
        self.used += k
        if self.limit is not None and self.used > self.limit:
            raise BudgetExhausted(f"budget of {self.limit} composed letters exhausted")


@dataclass(frozen=True)
class AnalysisConstants:
    epsilon0: float
    epsilon1: float
    delta0: float
    C0: float
    a: float | None = None

    @property
    def delta0_prime(self) -> float:
        return self.delta0 / 8.0

    def to_dict(self) -> dict:
        return {"epsilon0": self.epsilon0, "epsilon1": self.epsilon1, "delta0": self.delta0,
                "C0": self.C0, "a": self.a}


@dataclass
class ExpansionRecord:
    point: float
    per_n: list = field(default_factory=list)  # (n, mu_n, witness Word)
    lambda_hat: float = 0.0
    depth: int = 0

    @property
    def profile(self) -> list[tuple[int, float, float]]:
        """Rows ``(n, mu_n, ln(mu_n)/n)``; the ratio is 0 for n = 0."""
        return [(n, mu, math.log(mu) / n if n else 0.0) for n, mu, _ in self.per_n]

    def in_E_plus(self, a: float) -> bool:
        """Finite-depth evidence (not proof) that the exponent exceeds ``a``."""
        return self.lambda_hat > a


@dataclass(frozen=True)
class GaugeRecord:
    point: float
    epsilon: float
    value: float
    truncation_depth: int
    tail_bound: float


# ---------------------------------------------------------------------------
# Branch and bound
# ---------------------------------------------------------------------------


class _Letter:
    __slots__ = ("id", "lo", "hi", "value", "deriv", "src", "dst", "inv")

    def __init__(self, g):
        self.id = g.id
        d = g.domain
        self.lo = d.lo - TOL if d.closed_lo else d.lo + TOL
        self.hi = d.hi + TOL if d.closed_hi else d.hi - TOL
        self.value = g.expr.value
        self.deriv = g.expr.deriv
        self.src = g.source_component
        self.dst = g.target_component
        self.inv = g.inverse_id

    def defined_at(self, comp: int, y: float) -> bool:
        return comp == self.src and self.lo < y < self.hi


def _letters(pg: Pseudogroup) -> list[_Letter]:
    cache = getattr(pg, "_bb_letters", None)
    if cache is None:
        cache = [_Letter(pg[g]) for g in pg.letters]
        pg._bb_letters = cache
    return cache


def best_word(pg: Pseudogroup, x: float, max_len: int, min_len: int = 0, penalty: float = 0.0,
              component: int | None = None, incumbent: tuple | None = None,
              budget: Budget | None = None):
    """Maximise ``ln w'(x) - penalty * len(w)`` over reduced words with
    ``min_len <= len(w) <= max_len`` defined at ``x``.

    Returns ``(score, letters)``, or ``None`` when no word qualifies.  Among
    ties the shortest word found first in shortlex order wins.  Every
    visited node is charged to ``budget`` as one composed letter.
    """
    comp = pg.transversal.locate(x) if component is None else component
    letters = _letters(pg)
    step = math.log(pg.max_deriv) - penalty if letters else -math.inf
    best_score, best_path = (incumbent if incumbent is not None else (-math.inf, None))
    best_len = len(best_path) if best_path is not None else math.inf
    path: list[str] = []

    def bound(score, depth):
        lo_k = max(0, min_len - depth)
        hi_k = max_len - depth
        return score + (hi_k * step if step > 0 else lo_k * step)

    def visit(y, c, score, depth, last_inv):
        nonlocal best_score, best_path, best_len
        if depth >= min_len:
            if score > best_score + SCORE_TOL * max(1.0, abs(best_score)) or (
                    score >= best_score - SCORE_TOL * max(1.0, abs(best_score)) and depth < best_len):
                best_score, best_path, best_len = score, tuple(path), depth
        if depth == max_len:
            return
        for L in letters:
            if L.id == last_inv or not L.defined_at(c, y):
                continue
            d = L.deriv(y)
            if not d > 0 or not math.isfinite(d):
                raise DegenerateGenerator(f"{L.id}: derivative {d} at {y}")
            s = score + math.log(d) - penalty
            ub = bound(s, depth + 1)
            tol = SCORE_TOL * max(1.0, abs(best_score)) if math.isfinite(best_score) else 0.0
            if ub < best_score - tol or (ub <= best_score + tol and depth + 1 >= best_len):
                continue
            if budget is not None:
                budget.spend()
            path.append(L.id)
            visit(float(L.value(y)), L.dst, s, depth + 1, L.inv)
            path.pop()

    visit(float(x), comp, 0.0, 0, None)
    if best_path is None:
        return None
    return best_score, best_path


def exhaustive_mu(pg: Pseudogroup, x: float, n: int) -> float:
    """Reference ``mu_n`` by full enumeration (small ``n`` only)."""
    from .pseudogroup import enumerate_words
    return max(math.exp(w.log_deriv) for w in enumerate_words(pg, x, n))


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def mu_n(pg: Pseudogroup, x: float, n: int, constants: AnalysisConstants | None = None) -> tuple[float, Word]:
    """``(mu_n(x), witness)``; the witness has length <= n and derivative mu_n at x."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    score, letters = best_word(pg, x, n)
    w = make_word(pg, x, letters)
    return math.exp(w.log_deriv), w


def expansion_profile(pg: Pseudogroup, x: float, N: int = DEFAULT_DEPTH,
                      constants: AnalysisConstants | None = None) -> ExpansionRecord:
    """``mu_0 .. mu_N`` with witnesses and the finite-depth exponent estimate."""
    if N < 1:
        raise ValueError("depth N must be at least 1")
    rec = ExpansionRecord(point=float(x), depth=N)
    comp = pg.transversal.locate(x)
    inc = (0.0, ())
    rec.per_n.append((0, 1.0, make_word(pg, x, ())))
    best_ratio = -math.inf
    for n in range(1, N + 1):
        inc = best_word(pg, x, n, component=comp, incumbent=inc)
        w = make_word(pg, x, inc[1], comp)
        mu = math.exp(w.log_deriv)
        rec.per_n.append((n, mu, w))
        best_ratio = max(best_ratio, w.log_deriv / n)
    rec.lambda_hat = max(best_ratio, 0.0)
    return rec


def lambda_hat(pg: Pseudogroup, x: float, N: int = DEFAULT_DEPTH,
               constants: AnalysisConstants | None = None) -> float:
    """``max_{1<=n<=N} ln(mu_n(x))/n``: a lower estimate of the limsup at fixed N."""
    return expansion_profile(pg, x, N).lambda_hat


@dataclass(frozen=True)
class SandwichResult:
    passed: bool
    lower: float
    middle: float
    upper: float


def sandwich_check(pg: Pseudogroup, x: float, gid: str, n: int, rel: float = 1e-10) -> SandwichResult:
    """``mu_{n-1}(x) <= mu_n(g x) g'(x) <= mu_{n+1}(x)`` with relative slack ``rel``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    g = pg[gid]
    if not g.domain.contains(x):
        from .maps import OutOfDomain
        raise OutOfDomain(f"{x} not in domain of {gid}")
    y = float(g.expr.value(x))
    lower = mu_n(pg, x, n - 1)[0]
    middle = mu_n(pg, y, n)[0] * float(g.expr.deriv(x))
    upper = mu_n(pg, x, n + 1)[0]
    ok = lower <= middle * (1 + rel) and middle <= upper * (1 + rel)
    return SandwichResult(ok, lower, middle, upper)


def _thickened(g, r: float) -> tuple[float, float]:
    e = g.extended_domain
    return max(g.domain.lo - r, e.lo), min(g.domain.hi + r, e.hi)


def estimate_constants(pg: Pseudogroup, epsilon1: float, a: float | None = None,
                       seed: int = 0, pairs: int = 10_000) -> AnalysisConstants:
    """Uniform constants for the analysis at tolerance ``epsilon1``.

    ``delta0`` is half the smallest ``epsilon1 / L_g`` (capped at ``epsilon1``),
    with ``L_g`` the grid Lipschitz constant of ``log g'`` on the closed
    domain of ``g``.  The oscillation bound is then checked on random pairs
    ``|y - z| <= delta0`` in the ``delta0``-thickened domains, halving
    ``delta0`` until it passes.
    """
    eps0 = pg.transversal.epsilon0
    if not 0 < epsilon1 <= eps0:
        raise ValueError(f"need 0 < epsilon1 <= epsilon0 = {eps0}")
    gens = [pg[g] for g in pg.letters]
    delta0 = epsilon1
    for g in gens:
        lip = log_deriv_lipschitz(g.expr, g.domain.lo, g.domain.hi)
        if not math.isfinite(lip):
            raise DegenerateGenerator(f"{g.id}: log-derivative not finite on its domain")
        if lip > 0:
            delta0 = min(delta0, 0.5 * epsilon1 / lip)
    rng = np.random.default_rng(seed)
    for _ in range(60):
        if _oscillation_ok(gens, delta0, epsilon1, rng, pairs):
            break
        delta0 *= 0.5
    else:
        raise DegenerateGenerator("no admissible delta0 found")
    c0 = 1.0
    for g in gens:
        lo, hi = _thickened(g, delta0)
        d = g.expr.deriv(np.linspace(lo, hi, 1001))
        if not np.all(np.isfinite(d)) or not np.all(d > 0):
            raise DegenerateGenerator(f"{g.id}: derivative degenerate on thickened domain")
        c0 = max(c0, float(d.max()), float(1.0 / d.min()))
    return AnalysisConstants(eps0, epsilon1, delta0, c0, a)


def _oscillation_ok(gens, delta0, epsilon1, rng, pairs) -> bool:
    per = max(1, pairs // max(1, len(gens)))
    for g in gens:
        lo, hi = _thickened(g, delta0)
        y = rng.uniform(lo, hi, per)
        z = np.clip(y + rng.uniform(-delta0, delta0, per), lo, hi)
        diff = np.abs(np.log(g.expr.deriv(y)) - np.log(g.expr.deriv(z)))
        if not np.all(diff <= epsilon1):
            return False
    return True


def _mu_sequence(pg: Pseudogroup, x: float, depth: int) -> list[float]:
    rec = expansion_profile(pg, x, depth)
    return [mu for _, mu, _ in rec.per_n]


def tempered_gauge(pg: Pseudogroup, x: float, epsilon: float, depth: int) -> GaugeRecord:
    """Truncated ``sum_n e^{-n eps} mu_n(x)`` with a ratio-test tail bound.

    ``mu`` is computed one level past ``depth`` so that the first omitted
    term enters the growth cap.
    """
    if not epsilon > 0 or depth < 1:
        raise ValueError("need epsilon > 0 and depth >= 1")
    mus = _mu_sequence(pg, x, depth + 1)
    cap = max(mus[n + 1] / mus[n] for n in range(depth + 1))
    r = math.exp(-epsilon) * cap
    if r >= 1:
        raise Divergent(f"ratio test fails at {x}: e^-eps * {cap} = {r} >= 1")
    value = math.fsum(math.exp(-n * epsilon) * mus[n] for n in range(depth + 1))
    tail = math.exp(-(depth + 1) * epsilon) * mus[depth] * cap / (1 - r)
    return GaugeRecord(float(x), epsilon, value, depth, tail)


@dataclass(frozen=True)
class GaugeCheck:
    passed: bool
    lower: float
    middle: float
    upper: float


def gauge_inequality_check(pg: Pseudogroup, x: float, gid: str, epsilon: float, depth: int,
                           rel: float = 1e-10) -> GaugeCheck:
    """``e^-eps g(x) <= g(gx) g'(x) <= e^eps g(x)`` for the tempered gauge.

    Each side uses the interval ``[value, value + tail]`` that brackets the
    untruncated sum, so the check passes whenever the brackets are
    consistent with the inequality.
    """
    g = pg[gid]
    y = float(g.expr.value(x))
    gx = tempered_gauge(pg, x, epsilon, depth)
    gy = tempered_gauge(pg, y, epsilon, depth)
    h = float(g.expr.deriv(x))
    lower = math.exp(-epsilon) * gx.value
    middle = gy.value * h
    upper = math.exp(epsilon) * (gx.value + gx.tail_bound)
    ok = lower <= (gy.value + gy.tail_bound) * h * (1 + rel) and middle <= upper * (1 + rel)
    return GaugeCheck(ok, lower, middle, upper)


def write_profile_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["point", "n", "mu_n", "lambda_n_over_n"])
        for rec in records:
            for n, mu, ratio in rec.profile:
                out.writerow([repr(rec.point), n, repr(mu), repr(ratio)])
