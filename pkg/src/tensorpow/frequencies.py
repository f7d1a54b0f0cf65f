"""Eigenfrequencies of the H^2 -> L_2 embedding on an interval.

The frequencies are the nonnegative roots of

    I1:  w^3 cosh(w l) sin(x l) + x^3 sinh(w l) cos(x l) = 0
    I2:  w^3 sinh(w l) cos(x l) - x^3 cosh(w l) sin(x l) = 0      (x > 0)

with w = sqrt(1 + x^2) and l the half-length of the interval.  Both equations
are divided by cosh(w l) before evaluation, so they stay finite for any x.
Roots are bracketed on a float grid and polished with mpmath.
"""

import math
import threading
from dataclasses import dataclass

import mpmath

from .errors import BracketingError, DomainError
from .logscale import WORK_PREC

I1 = "I1"
I2 = "I2"


@dataclass(frozen=True)
class FrequencyRoot:
    omega: mpmath.mpf
    branch: str
    residual: float

    def __float__(self):
        return float(self.omega)


def _check_interval(interval):
    a, b = (float(v) for v in interval)
    if not b > a:
        raise DomainError(f"interval must satisfy b > a, got {interval!r}")
    return a, b


def _g1_float(x, l):
    w = math.sqrt(1.0 + x * x)
    return w**3 * math.sin(x * l) + x**3 * math.tanh(w * l) * math.cos(x * l)


def _g2_float(x, l):
    w = math.sqrt(1.0 + x * x)
    return w**3 * math.tanh(w * l) * math.cos(x * l) - x**3 * math.sin(x * l)


def normalized_residual(omega, branch, half_length):
    """Value of the cosh-normalized defining equation at ``omega`` (mpmath)."""
    with mpmath.workprec(WORK_PREC):
        x = mpmath.mpf(omega)
        l = mpmath.mpf(half_length)
        w = mpmath.sqrt(1 + x * x)
        if branch == I1:
            return w**3 * mpmath.sin(x * l) + x**3 * mpmath.tanh(w * l) * mpmath.cos(x * l)
        return w**3 * mpmath.tanh(w * l) * mpmath.cos(x * l) - x**3 * mpmath.sin(x * l)


def raw_relative_residual(omega, branch, half_length):
    """|F(omega)| / (|first term| + |second term|) for the unnormalized equation."""
    with mpmath.workprec(WORK_PREC + 64):
        x = mpmath.mpf(omega)
        l = mpmath.mpf(half_length)
        w = mpmath.sqrt(1 + x * x)
        if branch == I1:
            t1 = w**3 * mpmath.cosh(w * l) * mpmath.sin(x * l)
            t2 = x**3 * mpmath.sinh(w * l) * mpmath.cos(x * l)
            f = t1 + t2
        else:
            t1 = w**3 * mpmath.sinh(w * l) * mpmath.cos(x * l)
            t2 = x**3 * mpmath.cosh(w * l) * mpmath.sin(x * l)
            f = t1 - t2
        scale = abs(t1) + abs(t2)
        if scale == 0:
            return 0.0
        return float(abs(f) / scale)


def _polish(branch, lo, hi, l):
    # the float scan guarantees a sign change on [lo, hi]
    with mpmath.workprec(WORK_PREC):
        f = lambda x: normalized_residual(x, branch, l)
        a, b = mpmath.mpf(lo), mpmath.mpf(hi)
        fa = f(a)
        for _ in range(60):
            m = (a + b) / 2
            fm = f(m)
            if fm == 0:
                return m
            if (fm > 0) == (fa > 0):
                a, fa = m, fm
            else:
                b = m
        try:
            x = mpmath.findroot(f, (a, b), solver="anderson", verify=False)
        except (ZeroDivisionError, ValueError):
            x = None
        if x is None or not a <= x <= b:
            # secant step left the bracket; finish by bisection
            for _ in range(WORK_PREC):
                m = (a + b) / 2
                fm = f(m)
                if (fm > 0) == (fa > 0):
                    a, fa = m, fm
                else:
                    b = m
            x = (a + b) / 2
        return x


class FrequencyTable:
    """Append-only cache of the sorted roots of I1 u I2 for one interval."""

    def __init__(self, interval):
        a, b = _check_interval(interval)
        self.interval = (a, b)
        self.half_length = (b - a) / 2.0
        self.step = min(math.pi / (4.0 * self.half_length), 0.1)
        self._roots = [FrequencyRoot(mpmath.mpf(0), I1, 0.0)]
        self._scan_at = 0.0
        self._lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._roots)

    def root(self, i):
        """The i-th smallest element (0-based) of I1 u I2; root(0) is omega = 0."""
        if i >= len(self._roots):
            self.ensure(i + 1)
        return self._roots[i]

    def ensure(self, count):
        with self._lock:
            while len(self._roots) < count:
                self._scan_more()
        return self._roots[:count]

    def _scan_more(self):
        l, h = self.half_length, self.step
        # consecutive roots are ~pi/(2l) apart in the tail; a window of 4x that
        # without any sign change means the scan has lost track of the roots
        window = 2.0 * math.pi / l + 10.0
        x0 = self._scan_at
        x = x0
        g1, g2 = _g1_float(x, l), _g2_float(x, l)
        if x == 0.0:
            # omega = 0 is recorded; start just to its right so it is not bracketed again
            x = h * 1e-3
            g1, g2 = _g1_float(x, l), _g2_float(x, l)
        found = []
        while not found:
            if x - x0 > window:
                raise BracketingError(
                    f"no root of I1/I2 in [{x0:.6g}, {x:.6g}] for interval {self.interval}"
                )
            y = x + h
            f1, f2 = _g1_float(y, l), _g2_float(y, l)
            if (f1 > 0) != (g1 > 0):
                found.append((I1, x, y))
            if (f2 > 0) != (g2 > 0):
                found.append((I2, x, y))
            x, g1, g2 = y, f1, f2
        roots = []
        for branch, lo, hi in found:
            omega = _polish(branch, lo, hi, l)
            res = float(abs(normalized_residual(omega, branch, l)))
            roots.append(FrequencyRoot(omega, branch, res))
        roots.sort(key=lambda r: r.omega)
        self._roots.extend(roots)
        self._scan_at = x


_TABLES = {}
_TABLES_LOCK = threading.Lock()


def frequency_table(interval):
    key = _check_interval(interval)
    with _TABLES_LOCK:
        table = _TABLES.get(key)
        if table is None:
            table = _TABLES[key] = FrequencyTable(key)
    return table


def find_h2_frequencies(interval, count):
    """The ``count`` smallest elements of I1 u I2, ascending, starting at omega = 0."""
    if count < 1:
        raise DomainError("count must be a positive integer")
    return list(frequency_table(interval).ensure(count))
