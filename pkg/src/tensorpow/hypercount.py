"""Exact lattice-point counts under product constraints.

Two kinds of counts live here:

* hyperbolic-cross counts A_N(r, l) = #{n in {N, N+1, ...}^l : n_1 ... n_l <= r},
  with their closed-form envelopes;
* level-set counts #{n in N^d : sigma_1(n_1) ... sigma_d(n_d) >= t} (or > t)
  for tensor products of spectra.

Tensor counts work on *deficits*: for a coordinate sitting in level i of its
spectrum, the deficit is log sigma(1) - log sigma(level i) >= 0.  A tuple
reaches the threshold iff its deficits sum to at most the budget
sum_j log sigma_j(1) - log t.  All quantities are fixed-point ints, so the
sums are exact and the only fuzz is the declared tie tolerance.
"""

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath

from . import logscale
from .errors import CountCeilingExceeded, DomainError

DEFAULT_CEILING = 1 << 256


class _CapReached(Exception):
    pass


# ---------------------------------------------------------------------------
# hyperbolic cross


def _check_a_args(N, l):
    if not isinstance(N, int) or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    if not isinstance(l, int) or l < 1:
        raise DomainError(f"l must be a positive integer, got {l!r}")


@lru_cache(maxsize=1 << 18)
def _a_floor(N, R, l):
    if l == 1:
        return max(0, R - N + 1)
    if R < N**l:
        return 0
    total = 0
    k = N
    kmax = R // N ** (l - 1)
    while k <= kmax:
        q = R // k
        # every k' in [k, R // q] has R // k' == q
        k2 = min(R // q, kmax)
        total += (k2 - k + 1) * _a_floor(N, q, l - 1)
        k = k2 + 1
    return total


def a_count(N, r, l):
    """A_N(r, l): number of l-tuples of integers >= N whose product is <= r."""
    _check_a_args(N, l)
    if r < 0:
        return 0
    return _a_floor(N, math.floor(r), l)


def a2_sandwich(r, l):
    """Closed-form (lower, upper) envelopes of A_2(r, l) for l >= 2 and r >= 4**l.

    The lower envelope may be negative near the left end of the range; it is
    returned as is.
    """
    if not isinstance(l, int) or l < 2:
        raise DomainError("the sandwich needs an integer l >= 2")
    if r < 4**l:
        raise DomainError(f"the sandwich needs r >= 4**l = {4**l}, got r = {r}")
    with mpmath.workprec(80):
        r = mpmath.mpf(r)
        x = mpmath.log(r / 2**l)
        lower = r * (x ** (l - 1) / math.factorial(l - 1) - x ** (l - 2) / math.factorial(l - 2))
        upper = r * mpmath.log(r) ** (l - 1) / math.factorial(l - 1)
        return float(lower), float(upper)


def a2_coarse_bounds(r, l, delta):
    """(lower, upper) = (r / (3 * 2**(l-1)) if r >= 2**l else 0,  r**(1+delta) / delta**(l-1))."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    if not isinstance(l, int) or l < 1:
        raise DomainError("l must be a positive integer")
    with mpmath.workprec(80):
        rr = mpmath.mpf(r)
        upper = rr ** (1 + mpmath.mpf(delta)) / mpmath.mpf(delta) ** (l - 1)
        lower = rr / (3 * 2 ** (l - 1)) if r >= 2**l else mpmath.mpf(0)
        return float(lower), float(upper)


# ---------------------------------------------------------------------------
# dyadic closed forms


def dyadic_level_count(k, d):
    """Size of the level set {tau = 2**-k} of the d-th power of the dyadic spectrum."""
    if k < 0:
        return 0
    if d < 1:
        raise DomainError("d must be >= 1")
    return (1 << k) * math.comb(k + d - 1, d - 1)


def dyadic_cumulative(k, d):
    """N(k, d) = #{tau >= 2**-k}."""
    return sum(dyadic_level_count(j, d) for j in range(k + 1))


# ---------------------------------------------------------------------------
# tensor counts


@dataclass(frozen=True)
class CountQuery:
    """#{n : prod sigma_j(n_j) (>= | >) t} with t given as a fixed-point log."""

    spectra: tuple
    threshold: int
    comparison: str = ">="

    def __post_init__(self):
        object.__setattr__(self, "spectra", tuple(self.spectra))
        if not self.spectra:
            raise DomainError("a count query needs at least one spectrum")
        if self.comparison not in (">=", ">"):
            raise DomainError(f"comparison must be '>=' or '>', got {self.comparison!r}")

    @classmethod
    def from_value(cls, spectra, t, comparison=">="):
        spectra = tuple(spectra)
        return cls(spectra, logscale.log_fixed(t, spectra[0].precision), comparison)

    @classmethod
    def from_log(cls, spectra, log_t, comparison=">="):
        spectra = tuple(spectra)
        mode = spectra[0].precision
        if mode == "double":
            return cls(spectra, int(float(log_t) * logscale.ONE), comparison)
        with mpmath.workprec(logscale.WORK_PREC):
            return cls(spectra, logscale.from_mpf(mpmath.mpf(log_t)), comparison)

    @property
    def threshold_log(self):
        return logscale.to_float(self.threshold)


def is_power(spectra):
    first = spectra[0]
    return all(s is first or s.key == first.key for s in spectra[1:])


def top_log(spectra):
    total = 0
    for s in spectra:
        s.ensure_levels(1)
        total += s._lv_log[0]
    return total


def count_tolerance(spectra, threshold):
    return logscale.tolerance(spectra[0].tol_unit, threshold, top_log(spectra))


def deficit_budget(spectra, threshold, comparison):
    """Largest integer deficit sum X such that a tuple counts iff its deficits sum to <= X."""
    budget = top_log(spectra) - threshold
    tol = count_tolerance(spectra, threshold)
    if comparison == ">=":
        return budget + tol
    return budget - tol - 1


def _power_count(spec, d, X, cap):
    """Count tuples in the d-th power whose deficits sum to <= X (fixed-point)."""
    if X < 0:
        return 0
    spec.ensure_levels(1)
    top = spec._lv_log[0]
    spec.levels_until(top - X)
    neg, cum = spec._lv_neg, spec._lv_cum
    nlev = len(neg)
    c0 = cum[0]
    total = 0
    if nlev == 1:
        return c0**d
    r1 = neg[1] + top
    lmax = min(d, X // r1)
    fact = [math.factorial(i) for i in range(lmax + 1)]

    def last_level(y):
        # highest level index with deficit <= y
        return bisect.bisect_right(neg, y - top) - 1

    for l in range(lmax + 1):
        outer = math.comb(d, l) * c0 ** (d - l)
        if l == 0:
            total += outer
            continue
        fl = fact[l]
        acc_l = 0
        # stack entries: (position, min level, deficit so far, prod counts, run denominators, run)
        stack = [(0, 1, 0, 1, 1, 0)]
        while stack:
            p, m, acc, P, D, run = stack.pop()
            rem = l - p
            if rem == 1:
                hi = last_level(X - acc)
                if hi < m:
                    continue
                if p == 0:
                    acc_l += cum[hi] - cum[0]
                else:
                    cm = cum[m] - cum[m - 1]
                    acc_l += fl * P * cm // (D * (run + 1))
                    acc_l += fl * P // D * (cum[hi] - cum[m])
                if cap is not None and total + outer * acc_l >= cap:
                    raise _CapReached
                continue
            imax = last_level((X - acc) // rem)
            for i in range(imax, m - 1, -1):
                ci = cum[i] - cum[i - 1]
                di = neg[i] + top
                if p > 0 and i == m:
                    stack.append((p + 1, i, acc + di, P * ci, D * (run + 1), run + 1))
                else:
                    stack.append((p + 1, i, acc + di, P * ci, D, 1))
        total += outer * acc_l
    return total


def _product_count(spectra, X, cap):
    """Count tuples of a heterogeneous product whose deficits sum to <= X."""
    if X < 0:
        return 0
    d = len(spectra)
    tops, negs, cums = [], [], []
    for s in spectra:
        s.ensure_levels(1)
        top = s._lv_log[0]
        s.levels_until(top - X)
        tops.append(top)
        negs.append(s._lv_neg)
        cums.append(s._lv_cum)
    total = 0
    stack = [(0, 0, 1)]
    while stack:
        j, acc, w = stack.pop()
        neg, top, cum = negs[j], tops[j], cums[j]
        hi = bisect.bisect_right(neg, X - acc - top) - 1
        if hi < 0:
            continue
        if j == d - 1:
            total += w * cum[hi]
            if cap is not None and total >= cap:
                raise _CapReached
            continue
        for i in range(hi, -1, -1):
            c = cum[i] - (cum[i - 1] if i else 0)
            stack.append((j + 1, acc + neg[i] + top, w * c))
    return total


def count_deficits(spectra, X, cap=None):
    """Number of tuples whose deficits sum to <= X; stops early (returning >= cap) at ``cap``."""
    spectra = tuple(spectra)
    try:
        if is_power(spectra):
            return _power_count(spectra[0], len(spectra), X, cap)
        return _product_count(spectra, X, cap)
    except _CapReached:
        return cap


def _ceiling_check(value, ceiling):
    if ceiling is not None and value > ceiling:
        raise CountCeilingExceeded(
            f"count exceeds the configured ceiling 2**{ceiling.bit_length() - 1}"
        )
    return value


def tensor_count(query, ceiling=DEFAULT_CEILING):
    """Exact #{n in N^d : prod_j sigma_j(n_j) >= t} (or > t, per ``query.comparison``)."""
    X = deficit_budget(query.spectra, query.threshold, query.comparison)
    cap = None if ceiling is None else ceiling + 1
    return _ceiling_check(count_deficits(query.spectra, X, cap), ceiling)


def tensor_count_pair(spectra, threshold, ceiling=DEFAULT_CEILING):
    """(#{>= t}, #{> t}) for a fixed-point log threshold, with the same tolerance."""
    spectra = tuple(spectra)
    cap = None if ceiling is None else ceiling + 1
    ge = _ceiling_check(count_deficits(spectra, deficit_budget(spectra, threshold, ">="), cap), ceiling)
    gt = count_deficits(spectra, deficit_budget(spectra, threshold, ">"), cap)
    return ge, gt


def count_at_least(query, n):
    """Whether the count of ``query`` is at least ``n``; stops as soon as it is."""
    X = deficit_budget(query.spectra, query.threshold, query.comparison)
    return count_deficits(query.spectra, X, n) >= n
