"""Certified contracting words and hyperbolic fixed points.

Certificates are verified by dense sampling with a local refinement of the
derivative maximum.  This is numerical evidence, not interval arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .expansion import (AnalysisConstants, Budget, BudgetExhausted, DEFAULT_DEPTH, best_word,
                        expansion_profile)
from .maps import EMPTY, Interval, OutOfDomain
from .pliss import find_regular_index
from .pseudogroup import (EmptyComposition, Pseudogroup, Word, inverse_letters, make_word,
                          reduce_letters, word_value_and_deriv)

SEARCH_FACTOR = 3
BANACH_CAP = 10_000
BANACH_GAP = 1e-12
BOUNDARY_GUARD = 1e-9
DEFAULT_BUDGET = 10_000


class NoExpansionFound(RuntimeError):
    pass


class CertificationFailed(RuntimeError):
    def __init__(self, message: str, sample: float | None = None):
        super().__init__(message)
        self.sample = sample


@dataclass
class ContractionCertificate:
    word: Word
    J: Interval
    I: Interval
    sup_deriv: float
    chain_length: int
    fixed_point: float | None = None
    predicted_bound: float | None = None
    residual: float | None = None

    def to_dict(self) -> dict:
        return {
            "letters": list(self.word.letters),
            "basepoint": self.word.basepoint,
            "J": self.J.to_list(),
            "I": self.I.to_list(),
            "sup_deriv": self.sup_deriv,
            "chain_length": self.chain_length,
            "fixed_point": self.fixed_point,
            "predicted_bound": self.predicted_bound,
            "residual": self.residual,
        }


@dataclass
class FixedPointResult:
    Phi: ContractionCertificate
    Psi: ContractionCertificate
    pair: tuple  # (i, j) indices of the clustered certificates
    letters_used: int

    def to_dict(self) -> dict:
        return {"Phi": self.Phi.to_dict(), "Psi": self.Psi.to_dict(), "pair": list(self.pair),
                "letters_used": self.letters_used}


def _require_a(constants: AnalysisConstants) -> float:
    if constants.a is None or not constants.a > 0:
        raise ValueError("constants.a must be a positive expansion threshold")
    return constants.a


# ---------------------------------------------------------------------------
# Sampling helpers
# ---------------------------------------------------------------------------


def sampled_sup_deriv(w: Word, iv: Interval, step: float) -> tuple[float, float]:
    """Max of ``w'`` over ``iv`` on a grid of spacing <= ``step``, refined locally.

    Returns ``(sup, argmax)``.
    """
    n = max(3, int(math.ceil(iv.length / step)) + 1)
    xs = np.linspace(iv.lo, iv.hi, n)
    _, d = word_value_and_deriv(w, xs)
    k = int(np.argmax(d))
    best, arg = float(d[k]), float(xs[k])
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, n - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -float(word_value_and_deriv(w, t)[1]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-14})
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    return best, arg


def _image(w: Word, iv: Interval) -> Interval:
    lo, _ = word_value_and_deriv(w, iv.lo)
    hi, _ = word_value_and_deriv(w, iv.hi)
    return Interval.closed(w.component, float(lo), float(hi))


def _defined_on(w: Word, iv: Interval) -> bool:
    return w.base_domain.contains_interval(iv, tol=0.0) and iv.lo > w.base_domain.lo and iv.hi < w.base_domain.hi


# ---------------------------------------------------------------------------
# Expanding words and truncation
# ---------------------------------------------------------------------------


def extract_expanding_word(pg: Pseudogroup, x: float, n: int, constants: AnalysisConstants,
                           search_factor: int = SEARCH_FACTOR, budget: Budget | None = None) -> Word:
    """A word of length ``l >= n`` with ``ln w'(x) >= l a``.

    Lengths ``n, n+1, ..., search_factor * n`` are tried in turn; at each
    the best word by ``ln w'(x) - a l`` is taken.
    """
    a = _require_a(constants)
    comp = pg.transversal.locate(x)
    for m in range(n, search_factor * n + 1):
        found = best_word(pg, x, m, min_len=n, penalty=a, component=comp, budget=budget)
        if found is not None and found[0] >= 0:
            w = make_word(pg, x, found[1], comp)
            if w.log_deriv >= a * len(w):
                return w
    raise NoExpansionFound(f"no word of length {n}..{search_factor * n} expands by e^(a l) at {x}")


def pliss_truncate(pg: Pseudogroup, word: Word, constants: AnalysisConstants) -> tuple[int, Word]:
    """Cut ``word`` at the constructive ε₁-regular index of its ledger.

    The ledger is ``λ_j = -ln g_j'(z_{j-1})`` in the order the letters are
    applied.  Regularity at ``q`` means every block of letters ending at
    ``q`` expands, so the inverse of the prefix contracts from its first step.
    """
    a = _require_a(constants)
    lambdas = [-v for v in word.log_derivs]
    res = find_regular_index(lambdas, a, constants.epsilon1)
    return res.q, make_word(pg, word.basepoint, word.letters[: res.q], word.source_component)


def certify_contraction(pg: Pseudogroup, truncated: Word, x: float, constants: AnalysisConstants,
                        chain_length: int | None = None) -> ContractionCertificate:
    """Certificate for the inverse ``g`` of ``truncated`` on ``J = [y - 4δ', y + 4δ']``.

    ``y`` is the endpoint of ``truncated`` and ``δ' = δ0/8``.  The samples of
    ``J`` are pushed through ``g`` one letter at a time; at step ``k`` they
    must stay within ``4δ'`` of the orbit point and their cumulative
    log-derivative within ``k ε₁`` of the orbit's.  The final bound
    ``g' <= exp((-a + 2ε₁) l)`` uses ``l = chain_length`` (default: the
    truncated length).
    """
    a = _require_a(constants)
    eps1 = constants.epsilon1
    dp = constants.delta0_prime
    ell = len(truncated) if chain_length is None else chain_length
    if len(truncated) == 0:
        raise CertificationFailed("empty word")
    y = truncated.endpoint
    J = Interval.closed(truncated.component, y - 4 * dp, y + 4 * dp)
    try:
        g = make_word(pg, y, inverse_letters(pg, truncated.letters), truncated.component)
    except (EmptyComposition, OutOfDomain) as exc:
        raise CertificationFailed(f"inverse word undefined at {y}: {exc}", y) from None
    if not _defined_on(g, J):
        raise CertificationFailed(f"inverse word domain {g.base_domain} does not contain {J}", y)
    step = dp / 100
    xs = np.linspace(J.lo, J.hi, int(math.ceil(J.length / step)) + 1)
    z, orbit = xs, y
    logd = np.zeros_like(xs)
    orbit_log = 0.0
    for k, m in enumerate(g.maps, start=1):
        logd = logd + np.log(m.expr.deriv(z))
        orbit_log += math.log(m.expr.deriv(orbit))
        z = m.expr.value(z)
        orbit = float(m.expr.value(orbit))
        dist = np.abs(z - orbit)
        if dist.max() > 4 * dp * (1 + 1e-9):
            i = int(np.argmax(dist))
            raise CertificationFailed(f"step {k}: sample drifts {dist.max():.3g} > 4δ'", float(xs[i]))
        dev = np.abs(logd - orbit_log)
        if dev.max() > k * eps1 * (1 + 1e-9) + 1e-12:
            i = int(np.argmax(dev))
            raise CertificationFailed(f"step {k}: log-derivative off orbit by {dev.max():.3g}", float(xs[i]))
    bound = math.exp((-a + 2 * eps1) * ell)
    sup, arg = sampled_sup_deriv(g, J, step)
    if sup > bound * (1 + 1e-9):
        raise CertificationFailed(f"derivative {sup:.6g} exceeds exp((-a+2ε₁)l) = {bound:.6g}", arg)
    I = _image(g, J)
    return ContractionCertificate(g, J, I, sup, ell, predicted_bound=bound)


# ---------------------------------------------------------------------------
# Hyperbolic fixed points
# ---------------------------------------------------------------------------


def banach_fixed_point(w: Word, start: float, cap: int = BANACH_CAP, gap: float = BANACH_GAP) -> float:
    u = start
    for _ in range(cap):
        nxt = float(word_value_and_deriv(w, u)[0])
        if not w.base_domain.contains(nxt, tol=0.0):
            raise CertificationFailed(f"iteration left the domain at {nxt}", nxt)
        if abs(nxt - u) < gap:
            return nxt
        u = nxt
    raise CertificationFailed("fixed-point iteration did not converge", u)


@dataclass
class _Stage:
    n: int
    forward: Word  # truncated expanding word, x -> y
    cert: ContractionCertificate  # its inverse on J around y


def _stages(pg, x, constants, budget):
    n = 1
    while True:
        try:
            w = extract_expanding_word(pg, x, n, constants, budget=budget)
        except NoExpansionFound:
            return
        budget.spend(len(w))
        _, trunc = pliss_truncate(pg, w, constants)
        try:
            cert = certify_contraction(pg, trunc, x, constants, chain_length=len(w))
        except CertificationFailed:
            n += 1
            continue
        budget.spend(2 * len(trunc))
        yield _Stage(n, trunc, cert)
        n += 1


def _try_pair(pg, x, hi: _Stage, gj: _Stage, constants, mu, delta1):
    """``Phi = h_i o g_j`` near ``y_j`` and its conjugate ``Psi = g_j o h_i``."""
    dp = constants.delta0_prime
    yj = gj.forward.endpoint
    comp = gj.forward.component
    phi_letters = reduce_letters(pg, gj.cert.word.letters + hi.forward.letters)
    if not phi_letters:
        return None
    try:
        phi0 = make_word(pg, yj, phi_letters, comp)
        if phi0.component != comp:
            return None
        u = banach_fixed_point(phi0, yj)
        phi = make_word(pg, u, phi_letters, comp)
    except (EmptyComposition, OutOfDomain, CertificationFailed):
        return None
    J1 = Interval.closed(comp, u - dp, u + dp)
    if not _defined_on(phi, J1):
        return None
    sup, _ = sampled_sup_deriv(phi, J1, dp / 100)
    if not sup < mu:
        return None
    img = _image(phi, J1)
    if not J1.contains_in_interior(img, tol=0.0):
        return None
    g_u = make_word(pg, u, gj.cert.word.letters, comp)
    if not _defined_on(g_u, J1):
        return None
    v = float(word_value_and_deriv(g_u, u)[0])
    K = _image(g_u, J1)
    if not (K.lo > x - delta1 and K.hi < x + delta1):
        return None
    core = pg.transversal.core(K.component)
    if abs(v - core.lo) < BOUNDARY_GUARD or abs(v - core.hi) < BOUNDARY_GUARD:
        return None
    psi_letters = reduce_letters(pg, hi.forward.letters + gj.cert.word.letters)
    try:
        v = banach_fixed_point(make_word(pg, v, psi_letters, K.component), v)
        psi = make_word(pg, v, psi_letters, K.component)
    except (EmptyComposition, OutOfDomain, CertificationFailed):
        return None
    if not _defined_on(psi, K):
        return None
    psi_sup, _ = sampled_sup_deriv(psi, K, max(K.length, 1e-300) / 1000)
    res_u = abs(float(word_value_and_deriv(phi, u)[0]) - u)
    res_v = abs(float(word_value_and_deriv(psi, v)[0]) - v)
    Phi = ContractionCertificate(phi, J1, img, sup, len(phi_letters), u, mu, res_u)
    Psi = ContractionCertificate(psi, K, _image(psi, K), psi_sup, len(psi_letters), v, mu, res_v)
    return Phi, Psi


def find_hyperbolic_fixed_point(pg: Pseudogroup, x: float, constants: AnalysisConstants, mu: float = 0.5,
                                delta1: float | None = None, budget: int | Budget | None = DEFAULT_BUDGET
                                ) -> FixedPointResult:
    """Contractions ``Phi`` (near an accumulation of endpoints) and ``Psi`` (near ``x``).

    Certificates ``g_n`` are generated for ``n = 1, 2, ...``; as soon as two
    endpoints ``y_i, y_j`` (``i < j``) lie within ``δ*/4``, with
    ``δ* = min(1, δ'/4, δ1/4)``, the composition ``h_i o g_j`` is tested
    for a fixed point ``u`` with ``Phi' < mu`` on ``[u - δ', u + δ']``.
    """
    _require_a(constants)
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    dp = constants.delta0_prime
    if delta1 is None:
        delta1 = constants.delta0 / 16
    if not 0 < delta1 < constants.delta0 / 8:
        raise ValueError("need 0 < delta1 < delta0/8")
    radius = min(1.0, dp / 4, delta1 / 4) / 4
    budget = budget if isinstance(budget, Budget) else Budget(budget)
    stages: list[_Stage] = []
    try:
        for st in _stages(pg, x, constants, budget):
            yj = st.forward.endpoint
            for i, prev in enumerate(stages):
                if prev.forward.component == st.forward.component and abs(prev.forward.endpoint - yj) < radius:
                    found = _try_pair(pg, x, prev, st, constants, mu, delta1)
                    if found is not None:
                        return FixedPointResult(found[0], found[1], (prev.n, st.n), budget.used)
            stages.append(st)
    except BudgetExhausted:
        pass
    raise BudgetExhausted(f"no hyperbolic fixed point near {x} within {budget.limit} composed letters "
                          f"({len(stages)} certificates)")


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def check_no_hyperbolic_holonomy(pg: Pseudogroup, grid, constants: AnalysisConstants,
                                 depth: int = DEFAULT_DEPTH, budget: int = DEFAULT_BUDGET) -> list[dict]:
    """Grid points with finite-depth expansion evidence and the certificate search outcome.

    A consistency report: an empty list is what a pseudogroup without
    hyperbolic holonomy should produce, but it proves nothing.
    """
    a = _require_a(constants)
    out = []
    for x in grid:
        rec = expansion_profile(pg, float(x), depth)
        if not rec.in_E_plus(a):
            continue
        entry = {"point": float(x), "lambda_hat": rec.lambda_hat}
        try:
            res = find_hyperbolic_fixed_point(pg, float(x), constants, budget=budget)
            entry["certificate"] = res.to_dict()
        except BudgetExhausted as exc:
            entry["certificate"] = None
            entry["search"] = str(exc)
        out.append(entry)
    return out
