"""Closed-form bounds on tau and their verification against exact values.

All evaluators accept unnormalized spectra: with sigma(1) != 1 they rescale
sigma(2) -> sigma(2)/sigma(1), C -> C/sigma(1) and multiply the result by
sigma(1)**d.  Everything is computed in log space with mpmath.
"""

import math
from dataclasses import dataclass, field
from functools import partial

import mpmath

from . import logscale
from .errors import DomainError, InvariantViolation
from .parallel import parallel_map
from .rearrange import tau_at, tau_topk

DEFAULT_DELTAS = (0.25, 0.5, 0.65, 1.0)
TOPK_LIMIT = 200_000
PREC = logscale.WORK_PREC


@dataclass(frozen=True)
class PreasymptoticParams:
    """Inputs of the preasymptotic bounds.

    ``sigma1``, ``sigma2`` may be floats or mpmath numbers; ``v`` is the tie
    multiplicity #{n >= 2 : sigma(n) = sigma(2)}; ``(C, s)`` the envelope
    sigma(n) <= C n**-s for n >= 2 (``C`` may be ``None`` if only the lower
    bound is wanted).
    """

    sigma1: object
    sigma2: object
    v: int
    C: object
    s: float
    d: int
    delta: float = 1.0

    def __post_init__(self):
        if not 0 < self.sigma2 < self.sigma1:
            raise DomainError("need 0 < sigma2 < sigma1")
        if not (isinstance(self.v, int) and self.v >= 1):
            raise DomainError("tie multiplicity v must be a positive integer")
        if self.C is not None and not self.C > 0:
            raise DomainError("envelope constant C must be positive")
        if not self.s > 0:
            raise DomainError("envelope exponent s must be positive")
        if not (isinstance(self.d, int) and self.d >= 1):
            raise DomainError("d must be a positive integer")
        if not 0 < self.delta <= 1:
            raise DomainError(f"delta must lie in (0, 1], got {self.delta}")

    @classmethod
    def from_spectrum(cls, spectrum, d, delta=1.0):
        env = spectrum.envelope
        c, s = env if env is not None else (None, 1.0)
        with mpmath.workprec(PREC):
            s1 = mpmath.exp(logscale.to_mpf(spectrum.log_sigma(1)))
            s2 = mpmath.exp(logscale.to_mpf(spectrum.log_sigma(2)))
        return cls(s1, s2, spectrum.tie_multiplicity_v, c, s, d, delta)

    def with_delta(self, delta):
        return PreasymptoticParams(self.sigma1, self.sigma2, self.v, self.C, self.s, self.d, delta)


def _logs(p):
    s1 = mpmath.mpf(p.sigma1)
    L = mpmath.log(s1) - mpmath.log(mpmath.mpf(p.sigma2))  # log(sigma1/sigma2) > 0
    return mpmath.log(s1), L


def alpha_exponent(p):
    """alpha(d, delta) = log(1/sigma2') / log(sigma2'^(-(1+delta)/s) * d)."""
    with mpmath.workprec(PREC):
        _, L = _logs(p)
        return L / ((1 + mpmath.mpf(p.delta)) / mpmath.mpf(p.s) * L + mpmath.log(p.d))


def log_upper_constant(p):
    """log C~(delta) = C'^((1+delta)/s) / delta with C' = C / sigma1."""
    if p.C is None:
        raise DomainError("the upper bound needs an envelope (C, s)")
    with mpmath.workprec(PREC):
        c = mpmath.mpf(p.C) / mpmath.mpf(p.sigma1)
        delta = mpmath.mpf(p.delta)
        return c ** ((1 + delta) / mpmath.mpf(p.s)) / delta


def beta_exponent(p, n):
    """beta(d, n) = log(1/sigma2') / log(1 + v d / log_(1+v) n)."""
    _check_lower_range(p, n)
    with mpmath.workprec(PREC):
        _, L = _logs(p)
        return L / mpmath.log(1 + p.v * p.d * mpmath.log(1 + p.v) / mpmath.log(n))


def _check_lower_range(p, n):
    if not isinstance(n, int) or n < 2 or n > (1 + p.v) ** p.d:
        raise DomainError(f"the lower bound holds for 2 <= n <= (1+v)^d = {(1 + p.v) ** p.d}, got {n}")


def preasym_upper_log(p, n):
    if not isinstance(n, int) or n < 1:
        raise DomainError("n must be a positive integer")
    with mpmath.workprec(PREC):
        logs1, _ = _logs(p)
        return p.d * logs1 + alpha_exponent(p) * (log_upper_constant(p) - mpmath.log(n))


def preasym_lower_log(p, n):
    _check_lower_range(p, n)
    with mpmath.workprec(PREC):
        logs1, L = _logs(p)
        return p.d * logs1 - L - beta_exponent(p, n) * mpmath.log(n)


def preasym_upper(p, n):
    """Upper bound (C~(delta)/n)^alpha(d, delta) on tau(n), times sigma1**d."""
    with mpmath.workprec(PREC):
        return float(mpmath.exp(preasym_upper_log(p, n)))


def preasym_lower(p, n):
    """Lower bound sigma2' * n^-beta(d, n) on tau(n), times sigma1**d."""
    with mpmath.workprec(PREC):
        return float(mpmath.exp(preasym_lower_log(p, n)))


# ---------------------------------------------------------------------------
# asymptotic constants


def dyadic_constants(d):
    """(C_d, c_d): limsup and liminf of tau(n) n / (log n)^(d-1) for the dyadic spectrum."""
    if d < 1:
        raise DomainError("d must be >= 1")
    with mpmath.workprec(PREC):
        c = mpmath.log(mpmath.e, 2) ** (d - 1) / math.factorial(d - 1)
        return float(2 * c), float(c)


def _family_and_params(family_params):
    if hasattr(family_params, "family"):
        return family_params.family, family_params.params, family_params.asymptotic
    params = dict(family_params)
    return params.pop("family"), params, None


def asym_constant(family_params, d):
    """Constant K with tau(n) ~ K n^-s (log n)^(s(d-1)) for the d-th power.

    ``family_params`` is a spectrum or a dict with a ``family`` key and the
    construction parameters.  For the dyadic spectrum, where no limit exists,
    the limsup constant C_d is returned.
    """
    if not isinstance(d, int) or d < 1:
        raise DomainError("d must be a positive integer")
    family, params, asym = _family_and_params(family_params)
    fd = math.factorial(d - 1)
    with mpmath.workprec(PREC):
        if family == "dyadic":
            return dyadic_constants(d)[0]
        if family == "torus":
            a, b = params["interval"]
            base = mpmath.mpf(params.get("gamma", 1.0)) * (mpmath.mpf(b) - mpmath.mpf(a)) / mpmath.pi
            return float((base**d / fd) ** mpmath.mpf(params["s"]))
        if family == "jacobi":
            a = (mpmath.mpf(params["alpha"]) + mpmath.mpf(params["beta"]) + 1) / 2
            return float((a**d / fd) ** mpmath.mpf(params["s"]))
        if family in ("cube-h1", "cube-h2"):
            a, b = params["interval"]
            s = 1 if family == "cube-h1" else 2
            length = mpmath.mpf(b) - mpmath.mpf(a)
            return float((length**d / (mpmath.pi**d * fd)) ** s)
        if family == "custom":
            if asym is None and "tail" in params:
                asym = tuple(params["tail"])
            if asym is None:
                raise DomainError("custom spectrum without a power-law tail has no asymptotic constant")
            c, s = asym
            return float(mpmath.mpf(c) ** d / mpmath.mpf(fd) ** mpmath.mpf(s))
    raise DomainError(f"unknown family {family!r}")


def asym_exponent(spectrum):
    if spectrum.family == "dyadic":
        return 1.0
    if spectrum.asymptotic is None:
        return None
    return spectrum.asymptotic[1]


def asym_envelope_log(spectrum, d, n, constant=None):
    """log(K n^-s (log n)^(s(d-1))), or ``None`` where it is undefined (n = 1)."""
    s = asym_exponent(spectrum)
    if s is None or n < 2:
        return None
    if constant is None:
        constant = asym_constant(spectrum, d)
    with mpmath.workprec(PREC):
        ln = mpmath.log(n)
        return mpmath.log(constant) - s * ln + s * (d - 1) * mpmath.log(ln)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class BoundRow:
    n: int
    tau_fixed: int
    tie_class_size: object
    lower_log: object          # mpf or None outside the validity window
    upper_log: object          # best (smallest) upper bound over the delta grid
    delta_best: float
    asym_log: object           # informational only
    pass_lower: bool
    pass_upper: bool

    @property
    def passed(self):
        return self.pass_lower and self.pass_upper

    def as_dict(self):
        def f(x):
            return None if x is None else float(x)

        tau_log = logscale.to_float(self.tau_fixed)
        return {
            "n": self.n,
            "tau_log": tau_log,
            "tau": math.exp(tau_log) if tau_log > -745 else 0.0,
            "lower_log": f(self.lower_log),
            "upper_log": f(self.upper_log),
            "delta_best": self.delta_best,
            "asym_log": f(self.asym_log),
            "pass": self.passed,
        }


@dataclass(frozen=True)
class BoundReport:
    label: str
    d: int
    params: dict
    rows: tuple
    max_violation: float       # largest log-scale excess of tau over a bound (<= 0 when all pass)
    note: str = field(default="asymptotic envelope is informational and never asserted")

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    @property
    def failures(self):
        return [r for r in self.rows if not r.passed]


def _exact_taus(spectra, ns, method, threads):
    n_max = max(ns)
    if method == "auto":
        method = "topk" if n_max <= TOPK_LIMIT else "at"
    if method == "topk":
        top = tau_topk(spectra, n_max)
        taus = {n: (top[n - 1], None) for n in ns}
        # the bisection route must agree at a few spot checks
        for n in sorted({ns[0], ns[len(ns) // 2], ns[-1]}):
            r = tau_at(spectra, n)
            if r.tau_fixed != top[n - 1]:
                raise InvariantViolation(f"tau({n}): enumeration and bisection disagree")
            taus[n] = (r.tau_fixed, r.tie_class_size)
        return taus
    if method != "at":
        raise DomainError(f"unknown method {method!r}")
    results = parallel_map(partial(tau_at, spectra), ns, threads)
    return {r.n: (r.tau_fixed, r.tie_class_size) for r in results}


def verify_bounds(spectrum, d, n_range, delta_grid=DEFAULT_DELTAS, method="auto", threads=1):
    """Check lower <= tau(n) <= min_delta upper for every n in ``n_range``.

    ``n_range`` is an iterable of indices or a pair ``(first, last)``, inclusive.
    Lower bounds are only checked inside 2 <= n <= (1+v)^d.
    """
    if isinstance(n_range, tuple) and len(n_range) == 2:
        ns = list(range(n_range[0], n_range[1] + 1))
    else:
        ns = sorted(set(int(n) for n in n_range))
    if not ns or ns[0] < 1:
        raise DomainError("n_range must be a nonempty set of positive integers")
    deltas = tuple(float(x) for x in delta_grid)
    if not deltas:
        raise DomainError("delta grid is empty")
    base = PreasymptoticParams.from_spectrum(spectrum, d, deltas[0])
    plist = [base.with_delta(x) for x in deltas]
    spectra = [spectrum] * d
    taus = _exact_taus(spectra, ns, method, threads)
    try:
        const = asym_constant(spectrum, d)
    except DomainError:
        const = None
    tol = spectrum.tol_unit
    rows = []
    worst = -math.inf
    with mpmath.workprec(PREC):
        for n in ns:
            tau, tie = taus[n]
            tau_mp = logscale.to_mpf(tau)
            uppers = [(preasym_upper_log(p, n), p.delta) for p in plist]
            up, dbest = min(uppers, key=lambda x: x[0])
            slack = logscale.tolerance(tol, tau) / mpmath.mpf(logscale.ONE)
            pass_up = tau_mp <= up + slack
            worst = max(worst, float(tau_mp - up))
            if 2 <= n <= (1 + base.v) ** d:
                lo = preasym_lower_log(base, n)
                pass_lo = tau_mp >= lo - slack
                worst = max(worst, float(lo - tau_mp))
            else:
                lo, pass_lo = None, True
            asym = asym_envelope_log(spectrum, d, n, const) if const is not None else None
            rows.append(BoundRow(n, tau, tie, lo, up, dbest, asym, bool(pass_lo), bool(pass_up)))
    params = {
        "sigma1": float(base.sigma1), "sigma2": float(base.sigma2), "v": base.v,
        "C": None if base.C is None else float(base.C), "s": float(base.s),
        "deltas": list(deltas), "asym_constant": const,
    }
    return BoundReport(spectrum.label, d, params, tuple(rows), worst)
