"""Information complexity and a finite-sample polynomial-tractability classifier.

A problem family is a map d -> spectrum of the univariate operator T_d; the
d-variate problem is the d-th tensor power of T_d.  The information
complexity n(eps, d) = #{n : a_n(T_d^d) >= eps} is an exact count.  Whether
the family is (strongly) polynomially tractable is decided by how
a_2(T_d) = sigma_d(2) behaves in d; from finitely many d this can only be
estimated, so the classifier works with declared thresholds and reports the
evidence it used.
"""

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import logscale
from .errors import CountCeilingExceeded, DomainError
from .hypercount import DEFAULT_CEILING, CountQuery, tensor_count
from .parallel import parallel_map
from .spectra import (
    TorusNorm,
    cube_h1_spectrum,
    cube_h2_spectrum,
    jacobi_spectrum,
    torus_spectrum,
)

STRONG = "strongly-polynomial"
NOT_POLY = "not-polynomial"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ProblemFamily:
    generator: object  # callable d -> UnivariateSpectrum
    label: str = "family"

    def __call__(self, d):
        return self.generator(d)


@dataclass(frozen=True)
class FitPolicy:
    """Thresholds of the classifier.

    strongly-polynomial: least-squares slope of log a_2 against log d is at
    most ``slope_max`` and either the fit has R^2 >= ``r2_min`` or every
    secant slope between consecutive samples is at most ``slope_max``
    (decay faster than any power bends the log-log curve and lowers R^2).
    not-polynomial: min a_2 / max a_2 >= ``bounded_ratio`` over the samples.
    """

    slope_max: float = -0.1
    r2_min: float = 0.9
    bounded_ratio: float = 0.5
    hypothesis_n: int = 50
    eps_grid: tuple = (0.5, 0.25, 0.1)
    count_ceiling: int = 10**15


DEFAULT_D_RANGE = (4, 8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class TractabilityVerdict:
    verdict: str
    d_range: tuple
    a2: tuple
    slope: object
    r2: object
    ratio: object
    evidence: tuple            # (d, eps, n(eps, d) or None above the ceiling)
    diagnostics: tuple = ()
    policy: FitPolicy = field(default_factory=FitPolicy)

    @property
    def statement(self):
        return f"{self.verdict} (sampled d in [{min(self.d_range)}, {max(self.d_range)}])"

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "statement": self.statement,
            "d_range": list(self.d_range),
            "a2": [float(x) for x in self.a2],
            "fit": {"slope": self.slope, "r2": self.r2, "min_max_ratio": self.ratio},
            "policy": {
                "slope_max": self.policy.slope_max,
                "r2_min": self.policy.r2_min,
                "bounded_ratio": self.policy.bounded_ratio,
                "hypothesis_n": self.policy.hypothesis_n,
            },
            "evidence": [{"d": d, "eps": e, "n": n} for d, e, n in self.evidence],
            "diagnostics": list(self.diagnostics),
        }


def info_complexity(spectrum, d, epsilon, ceiling=DEFAULT_CEILING):
    """n(eps, d) = #{n in N^d : prod sigma(n_j) >= eps}."""
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if not isinstance(d, int) or d < 1:
        raise DomainError("d must be a positive integer")
    q = CountQuery.from_value([spectrum] * d, epsilon, ">=")
    return tensor_count(q, ceiling=ceiling)


def _fit(ds, a2):
    x = np.log(np.asarray(ds, dtype=float))
    y = np.log(np.asarray(a2, dtype=float))
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    secants = np.diff(y) / np.diff(x)
    return float(slope), r2, [float(s) for s in secants]


def _evidence_row(family, policy, d):
    spec = family(d)
    out = []
    for eps in policy.eps_grid:
        try:
            out.append((d, eps, info_complexity(spec, d, eps, ceiling=policy.count_ceiling)))
        except CountCeilingExceeded:
            out.append((d, eps, None))
    return out


def classify(family, d_range=DEFAULT_D_RANGE, fit_policy=None, threads=1):
    """Classify a family from a_2(T_d) on ``d_range`` (at least 4 dimensions)."""
    policy = fit_policy or FitPolicy()
    ds = sorted(set(int(d) for d in d_range))
    if len(ds) < 4 or ds[0] < 1:
        raise DomainError("classification needs at least 4 positive sample dimensions")
    spectra = [family(d) for d in ds]
    diagnostics = []

    one_tol = spectra[0].tol_unit
    for d, s in zip(ds, spectra):
        if abs(s.log_sigma(1)) > one_tol:
            diagnostics.append(f"a_1(T_{d}) = {s.sigma1!r} but the operators must have norm one")
    # a_n(T_d) must not increase with d
    for (d0, s0), (d1, s1) in zip(zip(ds, spectra), zip(ds[1:], spectra[1:])):
        for n in range(1, policy.hypothesis_n + 1):
            v0, v1 = s0.log_sigma(n), s1.log_sigma(n)
            lv0 = -math.inf if v0 is None else v0
            lv1 = -math.inf if v1 is None else v1
            if lv1 > lv0 + logscale.tolerance(one_tol, lv0 if v0 is not None else 0):
                diagnostics.append(f"a_{n}(T_d) increases from d={d0} to d={d1}")
                break

    a2 = [s.sigma2 for s in spectra]
    rows = parallel_map(partial(_evidence_row, family, policy), ds, threads)
    evidence = tuple(r for row in rows for r in row)

    slope = r2 = ratio = None
    if diagnostics:
        verdict = INCONCLUSIVE
    elif min(a2) <= 0.0:
        # a_2 vanishes: the tensor power has rank one from that d on
        verdict = STRONG
        diagnostics.append("a_2(T_d) vanishes on the sampled range")
    else:
        ratio = min(a2) / max(a2)
        slope, r2, secants = _fit(ds, a2)
        if ratio >= policy.bounded_ratio:
            verdict = NOT_POLY
        elif slope <= policy.slope_max and (
            r2 >= policy.r2_min or all(s <= policy.slope_max for s in secants)
        ):
            verdict = STRONG
        else:
            verdict = INCONCLUSIVE
    return TractabilityVerdict(
        verdict, tuple(ds), tuple(a2), slope, r2, ratio, evidence, tuple(diagnostics), policy
    )


# ---------------------------------------------------------------------------
# families described by plain data (used by the command line)


def smoothness_rule(rule):
    """Turn ``{"rule": name, ...}`` (or a number) into a map d -> s_d."""
    if isinstance(rule, (int, float)):
        value = rule
        return lambda d: value
    kind = rule.get("rule", "constant")
    c = rule.get("scale", 1.0)
    if kind == "constant":
        value = rule["value"]
        return lambda d: value
    if kind == "ceil_log2":
        return lambda d: max(1, math.ceil(c * math.log2(d)))
    if kind == "log":
        floor = rule.get("min", 1.0)
        return lambda d: max(floor, c * math.log(d))
    if kind == "sqrt":
        return lambda d: c * math.sqrt(d)
    if kind == "power":
        p = rule["exponent"]
        return lambda d: c * d**p
    if kind == "linear":
        return lambda d: c * d
    raise DomainError(f"unknown smoothness rule {kind!r}")


class _SpecFamily:
    # picklable generator built from plain data
    def __init__(self, spec):
        self.spec = dict(spec)
        self.rule = smoothness_rule(self.spec.get("s", 1))

    def __getstate__(self):
        return self.spec

    def __setstate__(self, state):
        self.__init__(state)

    def __call__(self, d):
        spec = self.spec
        fam = spec["family"]
        s = self.rule(d)
        if fam.startswith("torus"):
            kind = fam.split("-", 1)[1] if "-" in fam else spec.get("norm", "hash")
            interval = tuple(spec.get("interval", (0.0, 2 * math.pi)))
            return torus_spectrum(TorusNorm(kind, s, spec.get("gamma", 1.0), interval))
        if fam == "jacobi":
            return jacobi_spectrum(spec.get("alpha", 0.0), spec.get("beta", 0.0), s)
        if fam == "cube":
            interval = tuple(spec.get("interval", (0.0, 1.0)))
            k = int(round(s))
            if k == 1:
                return cube_h1_spectrum(interval)
            if k == 2:
                return cube_h2_spectrum(interval)
            raise DomainError(f"cube spectra are available for s_d in {{1, 2}} only, got s_{d} = {s}")
        raise DomainError(f"unknown family {fam!r} in family spec")


def family_from_spec(spec):
    """Build a :class:`ProblemFamily` from ``{"family": ..., "s": rule, ...}``."""
    if "family" not in spec:
        raise DomainError("family spec needs a 'family' key")
    gen = _SpecFamily(spec)
    return ProblemFamily(gen, spec.get("label", spec["family"]))
