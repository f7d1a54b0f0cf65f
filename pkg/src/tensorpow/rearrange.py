"""Nonincreasing rearrangement tau of a tensor product of spectra.

Three independent routes to the same numbers:

``tau_topk``
    best-first enumeration of the product lattice with a heap;
``tau_at``
    bisection on the threshold with exact counts, then a local enumeration
    of the final window, certified by #{> tau(n)} < n <= #{>= tau(n)};
``tau_brute``
    float64 evaluation of a full box with numpy, exact re-evaluation of the
    candidates near the answer.

Values are fixed-point logs (see :mod:`tensorpow.logscale`).  Ties are never
broken: tau is a value sequence, tie classes are reported by size.
"""

import bisect
import heapq
import math
from dataclasses import dataclass

import numpy as np

from . import logscale
from .errors import BoxTooSmall, BudgetExceeded, DomainError, InvariantViolation
from .hypercount import (
    count_deficits,
    count_tolerance,
    deficit_budget,
    is_power,
    top_log,
)

DEFAULT_BUDGET = 10**7
WINDOW_WEIGHT = 4096
BRUTE_LIMIT = 10**8


@dataclass(frozen=True)
class TauQueryResult:
    """tau(n) with its certificate.

    ``tau_fixed`` is ``None`` when tau(n) = 0 (finite-rank factors only).
    """

    n: int
    tau_fixed: object
    tie_class_size: int
    count_ge: int
    count_gt: int

    @property
    def tau_log(self):
        return logscale.to_float(self.tau_fixed)

    @property
    def tau(self):
        return logscale.exp_float(self.tau_fixed)


def _as_spectra(spectra):
    spectra = tuple(spectra)
    if not spectra:
        raise DomainError("need at least one spectrum")
    return spectra


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return int(n)


def _total_count(spectra):
    """Number of nonzero products, or None when infinite."""
    total = 1
    for s in spectra:
        if s.rank is None:
            return None
        total *= s.rank
    return total


# ---------------------------------------------------------------------------
# best-first enumeration


def _emit(out, k, value, weight, tol, cls):
    # canonicalize values within the tie tolerance to the class maximum
    if cls[0] is None or value < cls[0] - tol:
        cls[0] = value
    take = min(weight, k - len(out))
    out.extend([cls[0]] * take)


def tau_topk(spectra, k, budget=DEFAULT_BUDGET):
    """The first ``k`` values of tau, nonincreasing, as fixed-point logs.

    Raises :class:`BudgetExceeded` when ``k`` or the heap would exceed ``budget``.
    Fewer than ``k`` values are returned only when all factors have finite rank.
    """
    spectra = _as_spectra(spectra)
    k = _check_n(k)
    if k > budget:
        raise BudgetExceeded(f"k = {k} exceeds the enumeration budget {budget}")
    tol = logscale.tolerance(spectra[0].tol_unit, top_log(spectra))
    if is_power(spectra):
        return _topk_power(spectra[0], len(spectra), k, budget, tol)
    return _topk_product(spectra, k, budget, tol)


def _level_log(spec, i):
    if spec.ensure_levels(i + 1) <= i:
        return None
    return spec._lv_log[i]


def _topk_power(spec, d, k, budget, tol):
    # states are nonincreasing d-tuples of level indices; the parent of a
    # state decrements its last positive entry, so each state has one parent
    out = []
    cls = [None]
    v0 = _level_log(spec, 0)
    fact_d = math.factorial(d)
    start = (0,) * d
    heap = [(-d * v0, start)]
    pushed = 1
    while heap and len(out) < k:
        negv, t = heapq.heappop(heap)
        w = fact_d
        run = 1
        for j in range(d):
            i = t[j]
            w *= spec._lv_cum[i] - (spec._lv_cum[i - 1] if i else 0)
            if j and t[j] == t[j - 1]:
                run += 1
                w //= run
            else:
                run = 1
        _emit(out, k, -negv, w, tol, cls)
        last = -1
        for j in range(d - 1, -1, -1):
            if t[j] > 0:
                last = j
                break
        children = []
        if last >= 0 and (last == 0 or t[last - 1] > t[last]):
            children.append(last)
        if last + 1 < d:
            children.append(last + 1)
        for p in children:
            i = t[p] + 1
            vi = _level_log(spec, i)
            if vi is None:
                continue
            c = t[:p] + (i,) + t[p + 1:]
            heapq.heappush(heap, (negv + spec._lv_log[t[p]] - vi, c))
            pushed += 1
            if len(heap) > budget:
                raise BudgetExceeded(f"heap grew beyond the enumeration budget {budget}")
    return out


def _topk_product(spectra, k, budget, tol):
    d = len(spectra)
    out = []
    cls = [None]
    start = (0,) * d
    heap = [(-sum(_level_log(s, 0) for s in spectra), start)]
    while heap and len(out) < k:
        negv, t = heapq.heappop(heap)
        w = 1
        for s, i in zip(spectra, t):
            w *= s._lv_cum[i] - (s._lv_cum[i - 1] if i else 0)
        _emit(out, k, -negv, w, tol, cls)
        last = 0
        for j in range(d - 1, -1, -1):
            if t[j] > 0:
                last = j
                break
        for p in range(last, d):
            i = t[p] + 1
            vi = _level_log(spectra[p], i)
            if vi is None:
                continue
            c = t[:p] + (i,) + t[p + 1:]
            heapq.heappush(heap, (negv + spectra[p]._lv_log[t[p]] - vi, c))
            if len(heap) > budget:
                raise BudgetExceeded(f"heap grew beyond the enumeration budget {budget}")
    return out


# ---------------------------------------------------------------------------
# bisection with certified snap


def _window_patterns(spectra, xlo, xhi):
    """(deficit, weight) for every level pattern whose deficit sum lies in [xlo, xhi]."""
    out = []
    if xhi < 0:
        return out
    if is_power(spectra):
        spec, d = spectra[0], len(spectra)
        top = spec._lv_log[0]
        spec.levels_until(top - xhi)
        neg, cum = spec._lv_neg, spec._lv_cum
        c0 = cum[0]
        if xlo <= 0:
            out.append((0, c0**d))
        if len(neg) == 1:
            return out
        r1 = neg[1] + top
        for l in range(1, min(d, xhi // r1) + 1):
            outer = math.comb(d, l) * c0 ** (d - l)
            fl = math.factorial(l)
            stack = [(0, 1, 0, 1, 1, 0)]
            while stack:
                p, m, acc, P, D, run = stack.pop()
                rem = l - p
                ilo = m
                if rem == 1:
                    imax = bisect.bisect_right(neg, xhi - acc - top) - 1
                    ilo = max(m, bisect.bisect_left(neg, xlo - acc - top))
                else:
                    imax = bisect.bisect_right(neg, (xhi - acc) // rem - top) - 1
                for i in range(m if rem > 1 else ilo, imax + 1):
                    ci = cum[i] - cum[i - 1]
                    di = neg[i] + top
                    if p > 0 and i == m:
                        nP, nD, nrun = P * ci, D * (run + 1), run + 1
                    else:
                        nP, nD, nrun = P * ci, D, 1
                    if rem == 1:
                        out.append((acc + di, outer * (fl * nP // nD)))
                    else:
                        stack.append((p + 1, i, acc + di, nP, nD, nrun))
        return out
    d = len(spectra)
    tops = []
    for s in spectra:
        top = s._lv_log[0]
        s.levels_until(top - xhi)
        tops.append(top)
    stack = [(0, 0, 1)]
    while stack:
        j, acc, w = stack.pop()
        s, top = spectra[j], tops[j]
        neg, cum = s._lv_neg, s._lv_cum
        imax = bisect.bisect_right(neg, xhi - acc - top) - 1
        ilo = bisect.bisect_left(neg, xlo - acc - top) if j == d - 1 else 0
        for i in range(ilo, imax + 1):
            c = cum[i] - (cum[i - 1] if i else 0)
            if j == d - 1:
                out.append((acc + neg[i] + top, w * c))
            else:
                stack.append((j + 1, acc + neg[i] + top, w * c))
    return out


def _box_lower(spectra, n):
    """Every tuple of the box {1..m}^d with m^d >= n reaches sum_j log sigma_j(m)."""
    d = len(spectra)
    m = max(1, int(round(n ** (1.0 / d))))
    while m**d < n:
        m += 1
    while m > 1 and (m - 1) ** d >= n:
        m -= 1
    box = [s.log_sigma(m) for s in spectra]
    if any(v is None for v in box):
        return None
    return sum(box)


def _initial_lower(spectra, n, top):
    """A log-threshold t with #{>= t} >= n.

    Galloping down from the top keeps the bracket within twice the depth of
    tau(n), which matters for fast-decaying spectra where the box bound sits
    far too low; the box bound caps the gallop, which matters for d = 1 where
    doubling the depth squares the index.
    """
    floor = _box_lower(spectra, n)
    gaps = []
    for s in spectra:
        s.ensure_levels(2)
        if len(s._lv_log) > 1:
            gaps.append(s._lv_log[0] - s._lv_log[1])
    step = min(gaps) if gaps else logscale.ONE
    while True:
        lo = top - step
        if floor is not None and lo <= floor:
            return floor
        if count_deficits(spectra, deficit_budget(spectra, lo, ">="), n) >= n:
            return lo
        step *= 2


def tau_at(spectra, n, window_weight=WINDOW_WEIGHT):
    """tau(n) by bisection on exact counts; the result carries its certificate."""
    spectra = _as_spectra(spectra)
    n = _check_n(n)
    top = top_log(spectra)
    total = _total_count(spectra)
    if total is not None and n > total:
        return TauQueryResult(n, None, 0, total, total)

    # top class shortcut: covers the degenerate sigma(2) = sigma(1) case in closed form
    p0 = 1
    for s in spectra:
        p0 *= s._lv_cum[0]
    if n <= p0:
        return _certify(spectra, n, top)

    hi = top
    lo = _initial_lower(spectra, n, top)
    cap = n + window_weight
    ge_lo = count_deficits(spectra, deficit_budget(spectra, lo, ">="), cap)
    if ge_lo < n:
        raise InvariantViolation(f"initial lower threshold admits only {ge_lo} < {n} tuples")
    gt_hi = count_deficits(spectra, deficit_budget(spectra, hi, ">"))
    tol = count_tolerance(spectra, lo)
    while ge_lo - gt_hi > window_weight and hi - lo > 1000 * tol:
        mid = (lo + hi) // 2
        ge_mid = count_deficits(spectra, deficit_budget(spectra, mid, ">="), cap)
        if ge_mid >= n:
            lo, ge_lo = mid, ge_mid
        else:
            # fewer than n tuples reach mid - tol, so fewer than n exceed mid + tol
            hi = mid
            gt_hi = count_deficits(spectra, deficit_budget(spectra, hi, ">"))
    for widen in (0, 3):
        value = _snap(spectra, n, top, lo, hi, gt_hi, tol, widen)
        if value is not None:
            res = _certify(spectra, n, value)
            if res is not None:
                return res
        if widen == 0:
            gt_hi = count_deficits(spectra, deficit_budget(spectra, hi, ">") - 3 * tol)
    raise InvariantViolation(f"tau({n}): no value in the final window satisfies the certificate")


def _snap(spectra, n, top, lo, hi, gt_hi, tol, widen):
    # deficits strictly below the window belong to tuples already counted in gt_hi
    xhi = deficit_budget(spectra, lo, ">=") + widen * tol
    xlo = deficit_budget(spectra, hi, ">") + 1 - widen * tol
    pats = _window_patterns(spectra, xlo, xhi)
    if not pats:
        return None
    pats.sort()
    cum = gt_hi
    i = 0
    while i < len(pats):
        cls_def = pats[i][0]
        w = 0
        while i < len(pats) and pats[i][0] - cls_def <= tol:
            w += pats[i][1]
            i += 1
        if cum + w >= n:
            return top - cls_def
        cum += w
    return None


def _certify(spectra, n, value):
    ge = count_deficits(spectra, deficit_budget(spectra, value, ">="))
    gt = count_deficits(spectra, deficit_budget(spectra, value, ">"))
    if not gt < n <= ge:
        return None
    return TauQueryResult(n, value, ge - gt, ge, gt)


# ---------------------------------------------------------------------------
# brute force


def _float_logs(spec, m):
    """log sigma(1..m) as float64, expanded from the level structure."""
    spec.ensure_levels(1)
    while not spec._complete and spec._lv_cum[-1] < m:
        spec.ensure_levels(len(spec._lv_log) + 1)
    vals = []
    prev = 0
    for v, c in zip(spec._lv_log, spec._lv_cum):
        if prev >= m:
            break
        reps = min(c, m) - prev
        vals.append(np.full(reps, v / logscale.ONE))
        prev = min(c, m)
    arr = np.concatenate(vals) if vals else np.empty(0)
    if arr.size < m:
        arr = np.concatenate([arr, np.full(m - arr.size, -np.inf)])
    return arr


def brute_result(spectra, n, box_limit):
    """tau(n) over the box {1..box_limit}^d, as a :class:`TauQueryResult` for that box.

    Raises :class:`BoxTooSmall` unless every tuple outside the box is smaller
    than the answer, in which case the box result equals the true one.
    """
    spectra = _as_spectra(spectra)
    n = _check_n(n)
    d = len(spectra)
    if box_limit < 1:
        raise DomainError("box_limit must be positive")
    if box_limit**d > BRUTE_LIMIT:
        raise DomainError(f"box_limit**d = {box_limit**d} exceeds {BRUTE_LIMIT}")
    if box_limit**d < n:
        raise BoxTooSmall(f"the box holds {box_limit**d} < n = {n} tuples")
    axes = [_float_logs(s, box_limit) for s in spectra]

    rest = np.zeros(1)
    for ax in axes[1:]:
        rest = (rest[:, None] + ax[None, :]).ravel()
    rows = max(1, 2_000_000 // rest.size)

    def chunks():
        # slabs of the first axis, broadcast against all other axes
        for a in range(0, box_limit, rows):
            yield a, (axes[0][a:a + rows, None] + rest[None, :]).ravel()

    best = np.empty(0)
    for _, vals in chunks():
        merged = np.concatenate([best, vals[np.isfinite(vals)]])
        if merged.size > n:
            merged = np.partition(merged, merged.size - n)[merged.size - n:]
        best = merged
    if best.size < n:
        raise BoxTooSmall(f"fewer than n = {n} nonzero products in the box")
    approx = float(np.min(best))
    eps = 1e-9 * max(1.0, abs(approx))
    # float errors are ~1e-15 relative, so only values within eps need exact treatment
    above = 0
    cand = []
    tail_shape = (box_limit,) * (d - 1)
    for a, vals in chunks():
        above += int(np.count_nonzero(vals > approx + eps))
        for flat in np.nonzero(np.abs(vals - approx) <= eps)[0]:
            row, col = divmod(int(flat), rest.size)
            tup = (a + row,) + tuple(int(x) for x in np.unravel_index(col, tail_shape))
            cand.append(sum(s.log_sigma(i + 1) for s, i in zip(spectra, tup)))
    cand.sort(reverse=True)
    tol = count_tolerance(spectra, cand[0]) if cand else 0
    count = above
    value = None
    i = 0
    while i < len(cand):
        v = cand[i]
        w = 0
        while i < len(cand) and v - cand[i] <= tol:
            w += 1
            i += 1
        if count + w >= n:
            value = v
            ge, gt = count + w, count
            break
        count += w
    if value is None:
        raise InvariantViolation("brute force lost the n-th value during exact re-evaluation")
    # every tuple outside the box has a coordinate > box_limit
    top = [s.log_sigma(1) for s in spectra]
    total_top = sum(top)
    edge = None
    for j, s in enumerate(spectra):
        v = s.log_sigma(box_limit)
        if v is None:
            continue
        e = total_top - top[j] + v
        edge = e if edge is None else max(edge, e)
    if edge is not None and not value > edge + tol:
        raise BoxTooSmall(
            f"box {box_limit} too small: tau({n}) does not exceed the largest product on the box edge"
        )
    return TauQueryResult(n, value, ge - gt, ge, gt)


def tau_brute(spectra, n, box_limit):
    """tau(n) by sorting all products over {1..box_limit}^d (fixed-point log)."""
    return brute_result(spectra, n, box_limit).tau_fixed
