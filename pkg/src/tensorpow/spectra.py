"""Univariate singular-value sequences.

A spectrum is a nonincreasing zero sequence sigma(1) >= sigma(2) >= ... > 0,
evaluated as fixed-point natural logs (see :mod:`tensorpow.logscale`).
Besides pointwise evaluation every spectrum exposes its *levels*: the maximal
runs of indices sharing one value, in decreasing order of value.  The counting
and rearrangement code works on levels, so a block of 2**300 equal values
(dyadic spectrum) costs as much as a single one.
"""

import bisect
import math
import threading
from dataclasses import dataclass

import mpmath

from . import logscale
from .errors import DomainError, SpectrumError
from .frequencies import frequency_table

MAX_LEVEL_SCAN = 10**7

TORUS_KINDS = {
    "circ": "circ", "∘": "circ", "o": "circ",
    "star": "star", "*": "star",
    "plus": "plus", "+": "plus",
    "hash": "hash", "#": "hash",
}


class UnivariateSpectrum:
    """Base class; subclasses implement :meth:`_log_at` and possibly :meth:`_next_level`.

    Attributes
    ----------
    label : str
        Human-readable provenance.
    family : str
        Family tag, used by the CLI and by :func:`tensorpow.bounds.asym_constant`.
    params : dict
        Construction parameters (JSON-serializable).
    envelope : tuple or None
        ``(C, s)`` with sigma(n) <= C n**-s for every n >= 2.
    envelope_certified : bool
        Whether ``envelope`` rests on a closed-form argument rather than a
        user assertion.
    asymptotic : tuple or None
        ``(c, s)`` with sigma(n) n**s -> c, when that limit exists.
    rank : int or None
        Number of nonzero terms, ``None`` for infinitely many.
    """

    family = "custom"
    strict = False  # every level holds exactly one index

    def __init__(self, label, params=None, envelope=None, envelope_certified=False,
                 asymptotic=None, rank=None, precision=None):
        self.label = label
        self.params = dict(params or {})
        self.envelope = envelope
        self.envelope_certified = envelope_certified
        self.asymptotic = asymptotic
        self.rank = rank
        self.precision = logscale.precision_mode(precision)
        self.tol_unit = logscale.tol_unit(self.precision)
        self._prec = logscale.WORK_PREC if self.precision == "dd" else 53
        self._lv_log = []    # level log-values, strictly decreasing
        self._lv_neg = []    # negated level log-values, ascending (for bisect)
        self._lv_start = []  # first index of each level
        self._lv_cum = []    # number of indices in levels 0..i
        self._complete = False
        self._peek = None
        self._lock = threading.RLock()

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.RLock()

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"

    @property
    def key(self):
        """Identity used to detect tensor powers among lists of spectra."""
        return (self.family, tuple(sorted(self.params.items())), self.precision)

    # -- evaluation -------------------------------------------------------

    def _log_at(self, n):
        raise NotImplementedError

    def _fixed(self, x):
        return logscale.from_mpf(x)

    def _has_index(self, n):
        return self.rank is None or n <= self.rank

    def log_sigma(self, n):
        """Fixed-point log sigma(n); ``None`` when sigma(n) = 0."""
        if n < 1:
            raise DomainError(f"index must be >= 1, got {n}")
        if not self._has_index(n):
            return None
        if self._lv_start and n < self._lv_start[-1] + self._level_count(len(self._lv_start) - 1):
            i = bisect.bisect_right(self._lv_start, n) - 1
            return self._lv_log[i]
        with mpmath.workprec(self._prec):
            return self._log_at(n)

    def sigma(self, n):
        return logscale.exp_float(self.log_sigma(n))

    def log_sigma_float(self, n):
        return logscale.to_float(self.log_sigma(n))

    @property
    def sigma1(self):
        return self.sigma(1)

    @property
    def sigma2(self):
        return self.sigma(2)

    @property
    def tie_multiplicity_v(self):
        """#{n >= 2 : sigma(n) = sigma(2)}."""
        self.ensure_levels(2)
        if self._lv_cum[0] >= 2:
            return self._lv_cum[0] - 1
        if len(self._lv_log) < 2:
            return 0
        return self._level_count(1)

    # -- levels ------------------------------------------------------------

    def _level_count(self, i):
        return self._lv_cum[i] - (self._lv_cum[i - 1] if i else 0)

    def _next_level(self, start):
        """(log-value, count) of the level beginning at index ``start``."""
        v = self._peek[1] if self._peek and self._peek[0] == start else self._log_at(start)
        self._check_decrease(start, v)
        if self.strict:
            return v, 1
        tol = logscale.tolerance(self.tol_unit, v)
        n = start + 1
        while self._has_index(n) and self._available(n):
            w = self._log_at(n)
            if abs(w - v) > tol:
                self._peek = (n, w)
                break
            n += 1
            if n - start > MAX_LEVEL_SCAN:
                raise SpectrumError(
                    f"{self.label}: more than {MAX_LEVEL_SCAN} equal values starting at index "
                    f"{start}; tie class too large (is the sequence a zero sequence?)"
                )
        return v, n - start

    def _available(self, n):
        return True

    def _check_decrease(self, start, v):
        # a new level must lie strictly below the previous one
        if self._lv_log:
            last = self._lv_log[-1]
            if v >= last - logscale.tolerance(self.tol_unit, v, last):
                raise SpectrumError(f"{self.label}: sequence is not decreasing at index {start}")

    def _extend(self):
        start = self._lv_cum[-1] + 1 if self._lv_cum else 1
        if not self._has_index(start):
            self._complete = True
            return False
        if not self._available(start):
            raise SpectrumError(f"{self.label}: sigma({start}) is beyond the known prefix")
        with mpmath.workprec(self._prec):
            v, count = self._next_level(start)
        self._check_decrease(start, v)
        if self.rank is not None and start + count - 1 > self.rank:
            count = self.rank - start + 1
        self._lv_log.append(v)
        self._lv_neg.append(-v)
        self._lv_start.append(start)
        self._lv_cum.append(start + count - 1)
        if self.rank is not None and self._lv_cum[-1] >= self.rank:
            self._complete = True
        return True

    def ensure_levels(self, k):
        """Make at least ``k`` levels available (fewer only if the rank is exhausted)."""
        if len(self._lv_log) >= k or self._complete:
            return len(self._lv_log)
        with self._lock:
            while len(self._lv_log) < k and not self._complete:
                self._extend()
        return len(self._lv_log)

    def levels_until(self, floor):
        """Compute levels until one lies strictly below ``floor`` (or the rank ends)."""
        if self._complete or (self._lv_log and self._lv_log[-1] < floor):
            return len(self._lv_log)
        with self._lock:
            while not self._complete and (not self._lv_log or self._lv_log[-1] >= floor):
                self._extend()
        return len(self._lv_log)

    def level(self, i):
        """(log-value, first index, count) of level ``i``, or ``None`` past the rank."""
        if self.ensure_levels(i + 1) <= i:
            return None
        return self._lv_log[i], self._lv_start[i], self._level_count(i)

    # -- convenience --------------------------------------------------------

    def prefix(self, n_max):
        """List of (n, sigma(n), log sigma(n)) for n = 1..n_max."""
        rows = []
        for n in range(1, n_max + 1):
            fx = self.log_sigma(n)
            rows.append((n, logscale.exp_float(fx), logscale.to_float(fx)))
        return rows


# ---------------------------------------------------------------------------
# torus


@dataclass(frozen=True)
class TorusNorm:
    """One of the four equivalent Sobolev norms on the torus [a, b]."""

    kind: str
    s: float
    gamma: float = 1.0
    interval: tuple = (0.0, 2 * math.pi)

    def __post_init__(self):
        kind = TORUS_KINDS.get(str(self.kind).lower())
        if kind is None:
            raise DomainError(f"unknown torus norm {self.kind!r}; use circ, star, plus or hash")
        object.__setattr__(self, "kind", kind)
        a, b = (float(v) for v in self.interval)
        object.__setattr__(self, "interval", (a, b))
        if not b > a:
            raise DomainError("torus interval needs b > a")
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not self.s > 0:
            raise DomainError("smoothness s must be positive")
        if kind == "circ" and float(self.s) != int(self.s):
            raise DomainError("the circ norm sums derivatives 0..s and needs an integer s")

    @property
    def eta(self):
        a, b = self.interval
        return 2 * math.pi / (self.gamma * (b - a))

    @property
    def eta_mp(self):
        """eta at working precision; period lengths that round-trip as p*pi/q are read as exact."""
        a, b = self.interval
        length = self.gamma * (b - a)
        for q in range(1, 13):
            p = round(length * q / math.pi)
            if p > 0 and abs(length - p * math.pi / q) <= 4e-16 * length:
                return 2 * mpmath.mpf(q) / p
        return 2 * mpmath.pi / (mpmath.mpf(self.gamma) * (mpmath.mpf(b) - mpmath.mpf(a)))


class TorusSpectrum(UnivariateSpectrum):
    family = "torus"

    def __init__(self, norm, precision=None):
        self.norm = norm
        a, b = norm.interval
        s = float(norm.s)
        eta = norm.eta
        # w_k >= (eta |k|)^s and |k_n| = floor(n/2) >= n/3 for n >= 2
        envelope = ((3.0 / eta) ** s, s)
        params = {"norm": norm.kind, "s": s, "gamma": float(norm.gamma), "interval": [a, b]}
        super().__init__(
            f"torus-{norm.kind}(s={s:g}, gamma={norm.gamma:g}, [{a:g},{b:g}])",
            params, envelope, True, ((2.0 / eta) ** s, s), precision=precision,
        )

    def _log_w(self, k):
        # log of the Fourier weight w_k, k >= 0
        if k == 0:
            return mpmath.mpf(0)
        norm = self.norm
        x = norm.eta_mp * k
        s = mpmath.mpf(norm.s)
        if norm.kind == "circ":
            return mpmath.log(mpmath.fsum(x ** (2 * l) for l in range(int(norm.s) + 1))) / 2
        if norm.kind == "star":
            return mpmath.log1p(x ** (2 * s)) / 2
        if norm.kind == "plus":
            return s * mpmath.log1p(x * x) / 2
        return s * mpmath.log1p(x)

    def _log_at(self, n):
        return self._fixed(-self._log_w(n // 2))

    def _next_level(self, start):
        k = start // 2
        return self._fixed(-self._log_w(k)), (1 if k == 0 else 2)


def torus_spectrum(norm, precision=None):
    """sigma(n) = 1/w_{k_n} with k_n = (-1)^n floor(n/2)."""
    if not isinstance(norm, TorusNorm):
        norm = TorusNorm(**norm)
    return TorusSpectrum(norm, precision=precision)


# ---------------------------------------------------------------------------
# Jacobi


class JacobiSpectrum(UnivariateSpectrum):
    family = "jacobi"
    strict = True

    def __init__(self, alpha, beta, s, precision=None):
        if not (alpha > -1 and beta > -1):
            raise DomainError("Jacobi parameters need alpha, beta > -1")
        a = (alpha + beta + 1) / 2
        if not a > 0:
            raise DomainError("Jacobi parameters need a = (alpha+beta+1)/2 > 0")
        if not s > 0:
            raise DomainError("smoothness s must be positive")
        self.a = a
        self.s = float(s)
        # n / (1 + (n-1)/a) increases to a when a >= 1 and decreases from n = 2 when a < 1
        c = a if a >= 1 else 2 * a / (1 + a)
        super().__init__(
            f"jacobi(alpha={alpha:g}, beta={beta:g}, s={s:g})",
            {"alpha": float(alpha), "beta": float(beta), "s": float(s)},
            (math.nextafter(c**s, math.inf), float(s)), True, (a**s, float(s)),
            precision=precision,
        )
        self._a_mp = (mpmath.mpf(alpha) + mpmath.mpf(beta) + 1) / 2

    def _log_at(self, n):
        return self._fixed(-mpmath.mpf(self.s) * mpmath.log1p((n - 1) / self._a_mp))


def jacobi_spectrum(alpha, beta, s, precision=None):
    """sigma(n) = (1 + (n-1)/a)^-s with a = (alpha + beta + 1)/2."""
    return JacobiSpectrum(alpha, beta, s, precision=precision)


# ---------------------------------------------------------------------------
# nonperiodic cube


def _check_cube_interval(interval):
    a, b = (float(v) for v in interval)
    if not b > a:
        raise DomainError(f"interval must satisfy b > a, got {interval!r}")
    return a, b


def h1_envelope_constant(length):
    """sup_{n >= 2} n * (1 + ((n-1) pi / length)^2)^(-1/2), in closed form.

    n^2 / (1 + c (n-1)^2) increases for n - 1 < 1/c and decreases afterwards,
    so the supremum over integers is attained next to n* = 1 + length^2/pi^2.
    """
    with mpmath.workprec(80):
        L = mpmath.mpf(length)
        c = (mpmath.pi / L) ** 2
        peak = 1 + 1 / c
        cands = {2, max(2, int(mpmath.floor(peak))), max(2, int(mpmath.ceil(peak)))}
        best = max(n / mpmath.sqrt(1 + c * (n - 1) ** 2) for n in cands)
        return math.nextafter(float(best), math.inf)


class CubeH1Spectrum(UnivariateSpectrum):
    family = "cube-h1"
    strict = True

    def __init__(self, interval, precision=None):
        a, b = _check_cube_interval(interval)
        self.interval = (a, b)
        length = b - a
        super().__init__(
            f"cube-h1([{a:g},{b:g}])", {"interval": [a, b]},
            (h1_envelope_constant(length), 1.0), True, (length / math.pi, 1.0),
            precision=precision,
        )

    def _log_at(self, n):
        a, b = self.interval
        x = (n - 1) * mpmath.pi / (mpmath.mpf(b) - mpmath.mpf(a))
        return self._fixed(-mpmath.log1p(x * x) / 2)


def cube_h1_spectrum(interval=(0.0, 1.0), precision=None):
    """sigma(n) = (1 + ((n-1) pi / (b-a))^2)^(-1/2), the H^1 cosine basis."""
    return CubeH1Spectrum(interval, precision=precision)


class CubeH2Spectrum(UnivariateSpectrum):
    family = "cube-h2"
    strict = True

    def __init__(self, interval, prefix_len=None, precision=None):
        a, b = _check_cube_interval(interval)
        self.interval = (a, b)
        length = b - a
        self.frequencies = frequency_table((a, b))
        # the H^2 unit ball lies in the H^1 unit ball, so sigma_H2(n) <= sigma_H1(n)
        super().__init__(
            f"cube-h2([{a:g},{b:g}])", {"interval": [a, b]},
            (h1_envelope_constant(length), 1.0), True, ((length / math.pi) ** 2, 2.0),
            precision=precision,
        )
        if prefix_len:
            self.frequencies.ensure(prefix_len)

    def _log_at(self, n):
        w = self.frequencies.root(n - 1).omega
        w2 = w * w
        return self._fixed(-mpmath.log1p(w2 + w2 * w2) / 2)


def cube_h2_spectrum(interval=(0.0, 1.0), prefix_len=None, precision=None):
    """sigma(n) = (1 + w^2 + w^4)^(-1/2) over the sorted frequencies w of I1 u I2."""
    return CubeH2Spectrum(interval, prefix_len, precision=precision)


# ---------------------------------------------------------------------------
# dyadic


class DyadicSpectrum(UnivariateSpectrum):
    family = "dyadic"

    def __init__(self, precision=None):
        # sigma(n) n < 2 for every n, and sigma(n) n has no limit
        super().__init__("dyadic", {}, (2.0, 1.0), True, None, precision=precision)
        self._log2 = logscale.log_fixed(2, self.precision)

    def _log_at(self, n):
        return -(n.bit_length() - 1) * self._log2

    def _next_level(self, start):
        k = start.bit_length() - 1
        return -k * self._log2, 1 << k


def dyadic_spectrum(precision=None):
    """sigma(n) = 2^-k for 2^k <= n < 2^(k+1)."""
    return DyadicSpectrum(precision=precision)


# ---------------------------------------------------------------------------
# user-defined


class CustomSpectrum(UnivariateSpectrum):
    family = "custom"

    def __init__(self, values, tail=None, envelope=None, finite_rank=False,
                 label="custom", precision=None):
        values = list(values)
        if not values:
            raise SpectrumError("custom spectrum needs at least one value")
        if finite_rank and tail is not None:
            raise DomainError("a finite-rank spectrum cannot have a tail rule")
        for i, v in enumerate(values):
            if v < 0:
                raise SpectrumError(f"negative value {v!r} at index {i + 1}")
            if i and v > values[i - 1]:
                raise SpectrumError(
                    f"prefix is not nonincreasing: sigma({i + 1}) = {v!r} > sigma({i}) = {values[i - 1]!r}"
                )
        rank = None
        if finite_rank:
            positive = [v for v in values if v > 0]
            rank = len(positive)
            values = positive
        elif values[-1] <= 0:
            raise SpectrumError("zero values are only allowed with finite_rank=True")
        if not values:
            raise SpectrumError("custom spectrum has no positive value")
        self.values = values
        self.tail = tail
        params = {"values": [float(v) for v in values], "finite_rank": bool(finite_rank)}
        certified = False
        asym = None
        if isinstance(tail, tuple):
            c, s = float(tail[0]), float(tail[1])
            if not (c > 0 and s > 0):
                raise DomainError("power-law tail needs C > 0 and s > 0")
            params["tail"] = [c, s]
            asym = (c, s)
            if envelope is None:
                head = max((float(v) * n**s for n, v in enumerate(values, 1) if n >= 2), default=0.0)
                envelope = (math.nextafter(max(c, head), math.inf), s)
                certified = True
        elif tail is not None and not callable(tail):
            raise DomainError("tail must be None, a (C, s) pair or a callable n -> sigma(n)")
        if envelope is not None:
            envelope = (float(envelope[0]), float(envelope[1]))
        self._value_logs = [None] * len(values)
        super().__init__(label, params, envelope, certified, asym, rank, precision)
        self._uid = id(self)
        if tail is not None:
            nxt = len(values) + 1
            t = self._tail_value(nxt)
            if t > values[-1]:
                raise SpectrumError(
                    f"tail value sigma({nxt}) = {t!r} exceeds last prefix value {values[-1]!r}"
                )

    @property
    def key(self):
        return ("custom", self._uid)

    def _tail_value(self, n):
        if isinstance(self.tail, tuple):
            c, s = self.tail
            return c * float(n) ** (-s)
        return self.tail(n)

    def _available(self, n):
        return n <= len(self.values) or self.tail is not None or self.rank is not None

    def _log_at(self, n):
        m = len(self.values)
        if n <= m:
            fx = self._value_logs[n - 1]
            if fx is None:
                fx = self._value_logs[n - 1] = logscale.log_fixed(self.values[n - 1], self.precision)
            return fx
        if self.tail is None:
            raise SpectrumError(
                f"{self.label}: sigma({n}) requested beyond the prefix of length {m} and no tail rule given"
            )
        if isinstance(self.tail, tuple):
            c, s = self.tail
            if self.precision == "double":
                return int((math.log(c) - s * math.log(n)) * logscale.ONE)
            return self._fixed(mpmath.log(mpmath.mpf(c)) - mpmath.mpf(s) * mpmath.log(n))
        v = self.tail(n)
        if not v > 0:
            raise SpectrumError(f"{self.label}: tail rule returned non-positive sigma({n}) = {v!r}")
        return logscale.log_fixed(v, self.precision)


def custom_spectrum(values, tail=None, envelope=None, finite_rank=False, label="custom",
                    precision=None):
    """Spectrum backed by an explicit nonincreasing prefix.

    ``tail`` is ``(C, s)`` for sigma(n) = C n^-s beyond the prefix, or a callable
    ``n -> sigma(n)``.  Without a tail, indices past the prefix raise
    :class:`SpectrumError` unless ``finite_rank`` declares them zero.
    """
    return CustomSpectrum(values, tail, envelope, finite_rank, label, precision)


def check_spectrum(spectrum, n_max=10_000):
    """Sampled checks of the spectrum contract; returns a list of problems found."""
    problems = []
    prev = None
    for n in range(1, n_max + 1):
        fx = spectrum.log_sigma(n)
        if fx is None:
            break
        if prev is not None and fx > prev + logscale.tolerance(spectrum.tol_unit, fx, prev):
            problems.append(f"sigma({n}) > sigma({n - 1})")
        prev = fx
    if spectrum.envelope is not None:
        c, s = spectrum.envelope
        for n in range(2, n_max + 1):
            if not spectrum._has_index(n):
                break
            if spectrum.sigma(n) > c * n ** (-s) * (1 + 1e-12):
                problems.append(f"envelope violated at n={n}")
                break
    return problems
