"""Regular and irregular indices of a scalar log-derivative sequence.

Indices are 1-based throughout, matching ``lambdas[0] = λ_1``.

An index ``j`` is θ-regular when every backward block ending at ``j`` has
sum strictly below ``-i θ`` (``i`` the block length).  With
``Q_t = λ_1 + ... + λ_t + t θ`` (and ``Q_0 = 0``) this is the statement
``Q_j < min_{t<j} Q_t``, which a running prefix minimum checks in linear time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class IndexOutOfRange(IndexError):
    pass


class PreconditionViolation(ValueError):
    pass


@dataclass(frozen=True)
class PlissResult:
    q: int
    partial_sum: float
    checked: bool


def _as_array(lambdas) -> np.ndarray:
    arr = np.asarray(lambdas, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional sequence")
    return arr


def _check_index(j: int, m: int) -> None:
    if not 1 <= j <= m:
        raise IndexOutOfRange(f"index {j} outside 1..{m}")


def _shifted_prefix(arr: np.ndarray, theta: float) -> np.ndarray:
    """``Q_0 .. Q_m`` in extended precision."""
    ext = arr.astype(np.longdouble) + np.longdouble(theta)
    return np.concatenate(([np.longdouble(0)], np.cumsum(ext)))


def is_regular(lambdas, j: int, theta: float) -> bool:
    arr = _as_array(lambdas)
    _check_index(j, len(arr))
    # backward sums, exactly as defined, compensated
    block = arr[:j][::-1]
    sums = np.cumsum(block.astype(np.longdouble)) + theta * np.arange(1, j + 1, dtype=np.longdouble)
    if np.max(sums) < -1e-9:
        return True
    # recheck the close calls with exact-rounded summation
    for i in np.nonzero(sums >= -1e-9)[0]:
        if math.fsum(block[: i + 1].tolist() + [(i + 1) * theta]) >= 0:
            return False
    return True


def is_irregular(lambdas, k: int, theta: float) -> bool:
    arr = _as_array(lambdas)
    m = len(arr)
    _check_index(k, m)
    return math.fsum(arr[k - 1:].tolist() + [(m - k + 1) * theta]) >= 0


def regularity_flags(lambdas, theta: float) -> np.ndarray:
    """Boolean array, entry ``j-1`` true iff ``j`` is θ-regular."""
    arr = _as_array(lambdas)
    q = _shifted_prefix(arr, theta)
    running_min = np.minimum.accumulate(q[:-1])
    flags = q[1:] < running_min
    close = np.nonzero(np.abs(q[1:] - running_min) < 1e-9)[0]
    for idx in close:
        flags[idx] = is_regular(arr, int(idx) + 1, theta)
    return flags


def irregularity_flags(lambdas, theta: float) -> np.ndarray:
    """Boolean array, entry ``k-1`` true iff ``k`` is θ-irregular."""
    arr = _as_array(lambdas)
    ext = arr.astype(np.longdouble) + np.longdouble(theta)
    suffix = np.cumsum(ext[::-1])[::-1]
    flags = suffix >= 0
    close = np.nonzero(np.abs(suffix) < 1e-9)[0]
    for idx in close:
        flags[idx] = is_irregular(arr, int(idx) + 1, theta)
    return flags


def find_regular_index(lambdas, a: float, epsilon1: float) -> PlissResult:
    """The constructive ε₁-regular index: one before the least irregular index, or ``m``."""
    arr = _as_array(lambdas)
    m = len(arr)
    if m == 0:
        raise PreconditionViolation("empty sequence")
    if not 0 < epsilon1 < a:
        raise PreconditionViolation(f"need 0 < epsilon1 < a, got epsilon1={epsilon1}, a={a}")
    total = math.fsum(arr.tolist())
    if total > -a * m:
        raise PreconditionViolation(f"sum {total} exceeds -a*m = {-a * m}")
    irregular = np.nonzero(irregularity_flags(arr, epsilon1))[0]
    q = int(irregular[0]) if len(irregular) else m
    if q == 0:
        # the suffix from 1 is the whole sum, which is below -a m < -ε₁ m
        raise PreconditionViolation("index 1 irregular despite the sum bound")
    partial = math.fsum(arr[:q].tolist())
    checked = is_regular(arr, q, epsilon1) and partial <= (-a + epsilon1) * m + 1e-9 * max(1, m)
    return PlissResult(q, partial, checked)


def max_regular_index(lambdas, theta: float) -> int | None:
    """Largest θ-regular index, or ``None`` when there is none."""
    hits = np.nonzero(regularity_flags(lambdas, theta))[0]
    return int(hits[-1]) + 1 if len(hits) else None
