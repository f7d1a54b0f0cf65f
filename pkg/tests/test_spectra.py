import math
import pickle
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorpow import logscale
from tensorpow.errors import DomainError, SpectrumError
from tensorpow.spectra import (
    TorusNorm,
    check_spectrum,
    cube_h1_spectrum,
    cube_h2_spectrum,
    custom_spectrum,
    dyadic_spectrum,
    h1_envelope_constant,
    jacobi_spectrum,
    torus_spectrum,
)

# independent high-precision evaluations (mpmath, 40 digits), frozen
H1_SIGMA2 = 0.3033144710533528640
H1_SIGMA5 = 0.0793266968436585288
CIRC_UNIT_SIGMA2 = 0.1571767254775898431  # (1 + 4 pi^2)^(-1/2)
H2_SIGMA2 = 0.2779455694751951621


def all_builtins():
    return [
        torus_spectrum(TorusNorm("hash", 1.0)),
        torus_spectrum(TorusNorm("plus", 2.5, 0.5, (0.0, 3.0))),
        torus_spectrum(TorusNorm("star", 1.5)),
        torus_spectrum(TorusNorm("circ", 2, 1.0, (0.0, 1.0))),
        jacobi_spectrum(0.0, 0.0, 1.0),
        jacobi_spectrum(-0.5, -0.25, 0.7),
        cube_h1_spectrum((0.0, 1.0)),
        cube_h1_spectrum((-2.0, 3.0)),
        cube_h2_spectrum((0.0, 1.0)),
        dyadic_spectrum(),
    ]


def test_torus_examples():
    t = torus_spectrum(TorusNorm("#", 1.0, 1.0, (0.0, 2 * math.pi)))
    assert t.sigma2 == pytest.approx(0.5, rel=1e-15)
    assert t.sigma1 == 1.0
    assert t.tie_multiplicity_v == 2
    circ = torus_spectrum(TorusNorm("∘", 1, 1.0, (0.0, 1.0)))
    assert circ.sigma2 == pytest.approx(CIRC_UNIT_SIGMA2, rel=1e-15)


@pytest.mark.parametrize("kind", ["circ", "star", "plus", "hash"])
def test_torus_symmetric_pairs_are_exact_ties(kind):
    t = torus_spectrum(TorusNorm(kind, 2, 1.3, (0.0, 5.0)))
    assert t.log_sigma(1) == 0
    for m in range(1, 300):
        assert t.log_sigma(2 * m) == t.log_sigma(2 * m + 1)
    for i in range(1, 50):
        assert t.level(i)[1:] == (2 * i, 2)


def test_torus_weights_match_closed_forms():
    eta = 2 * math.pi / (0.7 * 4.0)
    cases = {
        "circ": lambda k: math.sqrt(sum((eta * k) ** (2 * l) for l in range(3))),
        "star": lambda k: math.sqrt(1 + (eta * k) ** 4),
        "plus": lambda k: (1 + (eta * k) ** 2),
        "hash": lambda k: (1 + eta * k) ** 2,
    }
    for kind, w in cases.items():
        t = torus_spectrum(TorusNorm(kind, 2, 0.7, (1.0, 5.0)))
        for n in range(1, 40):
            assert t.sigma(n) == pytest.approx(1 / w(n // 2), rel=1e-13)


def test_float_periods_are_read_as_exact_multiples_of_pi():
    # the float interval (0, 2*math.pi) still gives eta = 1 exactly
    assert TorusNorm("hash", 1.0).eta_mp == 1
    assert TorusNorm("plus", 1.0, 1.0, (0.0, math.pi)).eta_mp == 2
    assert TorusNorm("plus", 1.0, 3.0, (0.0, 2 * math.pi / 3)).eta_mp == 1
    # a length that is no rational multiple of pi keeps its binary value
    with mpmath.workprec(logscale.WORK_PREC):
        assert TorusNorm("plus", 1.0, 1.0, (0.0, 1.0)).eta_mp == 2 * mpmath.pi


def test_torus_rejects_bad_parameters():
    with pytest.raises(DomainError):
        TorusNorm("hash", 0.0)
    with pytest.raises(DomainError):
        TorusNorm("hash", 1.0, gamma=-1.0)
    with pytest.raises(DomainError):
        TorusNorm("hash", 1.0, interval=(1.0, 1.0))
    with pytest.raises(DomainError):
        TorusNorm("circ", 1.5)
    with pytest.raises(DomainError):
        TorusNorm("diamond", 1.0)


def test_jacobi_examples():
    assert jacobi_spectrum(0, 0, 1).sigma(3) == pytest.approx(0.2, rel=1e-15)
    assert jacobi_spectrum(0.5, 0.5, 2).sigma(2) == pytest.approx(0.25, rel=1e-15)
    assert jacobi_spectrum(3, 1, 4.2).sigma(1) == 1.0
    j = jacobi_spectrum(0, 0, 1)
    for n in range(1, 2000):
        assert j.sigma(n) == pytest.approx(1 / (2 * n - 1), rel=1e-15)
    with pytest.raises(DomainError):
        jacobi_spectrum(-1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        jacobi_spectrum(-0.9, -0.9, 1.0)


def test_cube_h1_examples():
    h1 = cube_h1_spectrum((0.0, 1.0))
    assert h1.sigma1 == 1.0
    assert h1.sigma2 == pytest.approx(H1_SIGMA2, rel=1e-15)
    assert h1.sigma(5) == pytest.approx(H1_SIGMA5, rel=1e-15)
    assert h1.sigma2 <= 0.30332
    # unit interval envelope 0.607 / n
    assert h1.envelope[0] <= 0.607
    with pytest.raises(DomainError):
        cube_h1_spectrum((1.0, 0.0))


def test_h1_envelope_constant_against_dense_scan():
    for length in (0.3, 1.0, 2.0, 7.5, 40.0):
        n = np.arange(2, 200_000, dtype=float)
        scan = np.max(n / np.sqrt(1 + ((n - 1) * np.pi / length) ** 2))
        c = h1_envelope_constant(length)
        assert scan <= c <= scan * (1 + 1e-12)


def test_cube_h2_examples():
    h2 = cube_h2_spectrum((0.0, 1.0))
    assert h2.sigma1 == 1.0
    assert 0.27735 <= h2.sigma2 <= 0.27795
    assert h2.sigma2 == pytest.approx(H2_SIGMA2, rel=1e-15)
    assert h2.sigma(10) <= 0.0607


def test_h2_below_h1():
    h1, h2 = cube_h1_spectrum((0.0, 1.0)), cube_h2_spectrum((0.0, 1.0))
    for n in range(1, 400):
        assert h2.log_sigma(n) <= h1.log_sigma(n)


def test_dyadic_examples():
    d = dyadic_spectrum()
    assert d.sigma(1) == 1.0
    assert d.sigma(3) == 0.5
    assert d.sigma(4) == 0.25
    assert d.sigma(7) == 0.25
    assert d.tie_multiplicity_v == 2
    assert d.level(300)[1:] == (2**300, 2**300)


def test_custom_examples():
    c = custom_spectrum([1, 0.5, 0.25])
    assert c.sigma(2) == 0.5
    with pytest.raises(SpectrumError):
        c.sigma(4)
    t = custom_spectrum([1, 0.5], tail=(1.0, 1.0))
    assert t.sigma(10) == pytest.approx(0.1, rel=1e-15)
    with pytest.raises(SpectrumError):
        custom_spectrum([1, 0.6, 0.7])


def test_custom_exact_fractions_and_ties():
    c = custom_spectrum([Fraction(1), Fraction(1, 3), Fraction(1, 3), Fraction(1, 9)], finite_rank=True)
    assert c.rank == 4
    assert c.tie_multiplicity_v == 2
    assert c.log_sigma(5) is None
    assert c.sigma(5) == 0.0
    assert [c.level(i)[1:] for i in range(3)] == [(1, 1), (2, 2), (4, 1)]
    assert c.level(3) is None


def test_custom_rejections():
    with pytest.raises(SpectrumError):
        custom_spectrum([])
    with pytest.raises(SpectrumError):
        custom_spectrum([1, 0.5, 0])
    with pytest.raises(SpectrumError):
        custom_spectrum([1, -0.5], finite_rank=True)
    with pytest.raises(DomainError):
        custom_spectrum([1, 0.5], tail=(1, 1), finite_rank=True)
    with pytest.raises(SpectrumError):
        custom_spectrum([1, 0.1], tail=(1.0, 1.0))  # tail starts above the prefix
    with pytest.raises(DomainError):
        custom_spectrum([1, 0.5], tail="n^-1")


def test_custom_callable_tail_must_decrease():
    bad = custom_spectrum([1.0, 0.5], tail=lambda n: 0.4 if n < 5 else 0.45)
    with pytest.raises(SpectrumError):
        bad.ensure_levels(10)


def test_constant_tail_is_not_a_zero_sequence(monkeypatch):
    import tensorpow.spectra as sp

    monkeypatch.setattr(sp, "MAX_LEVEL_SCAN", 1000)
    flat = custom_spectrum([1.0, 0.5], tail=lambda n: 0.25)
    with pytest.raises(SpectrumError):
        flat.ensure_levels(4)


def test_custom_power_tail_envelope_is_certified():
    c = custom_spectrum([1.0, 0.9, 0.5, 0.2], tail=(1.5, 1.5))
    C, s = c.envelope
    assert c.envelope_certified
    for n in range(2, 5000):
        assert c.sigma(n) <= C * n ** (-s) * (1 + 1e-15)


@pytest.mark.parametrize("idx", range(10))
def test_builtin_contracts(idx):
    spec = all_builtins()[idx]
    n_max = 2000 if spec.family == "cube-h2" else 10_000
    assert check_spectrum(spec, n_max) == []
    assert spec.sigma1 == 1.0
    assert spec.envelope_certified


@pytest.mark.parametrize("idx", [0, 1, 2, 3, 4, 5, 6, 7, 9])
def test_envelopes_hold_on_a_million_terms(idx):
    # closed forms evaluated in float64 over n <= 10^6
    spec = all_builtins()[idx]
    C, s = spec.envelope
    n = np.arange(2, 10**6 + 1, dtype=float)
    p = spec.params
    if spec.family == "torus":
        a, b = p["interval"]
        eta = 2 * math.pi / (p["gamma"] * (b - a))
        x = eta * np.floor(n / 2)
        sv = p["s"]
        w = {
            "circ": lambda: np.sqrt(sum(x ** (2 * l) for l in range(int(sv) + 1))),
            "star": lambda: np.sqrt(1 + x ** (2 * sv)),
            "plus": lambda: (1 + x**2) ** (sv / 2),
            "hash": lambda: (1 + x) ** sv,
        }[p["norm"]]()
        sig = 1 / w
    elif spec.family == "jacobi":
        a = (p["alpha"] + p["beta"] + 1) / 2
        sig = (1 + (n - 1) / a) ** (-p["s"])
    elif spec.family == "cube-h1":
        a, b = p["interval"]
        sig = 1 / np.sqrt(1 + ((n - 1) * np.pi / (b - a)) ** 2)
    else:
        sig = 2.0 ** -np.floor(np.log2(n))
    assert np.all(sig <= C * n ** (-s) * (1 + 1e-12))


def test_interlacing_with_torus():
    h1 = cube_h1_spectrum((0.0, 1.0))
    t = torus_spectrum(TorusNorm("circ", 1, 1.0, (0.0, 1.0)))
    for n in range(1, 1001):
        assert h1.log_sigma(n + 1) <= t.log_sigma(n) <= h1.log_sigma(n)


def test_spectra_pickle():
    for spec in all_builtins():
        spec.ensure_levels(5)
        clone = pickle.loads(pickle.dumps(spec))
        assert [clone.log_sigma(n) for n in range(1, 20)] == [spec.log_sigma(n) for n in range(1, 20)]


def test_double_precision_mode(monkeypatch):
    monkeypatch.setenv(logscale.PRECISION_ENV, "double")
    t = torus_spectrum(TorusNorm("hash", 1.0))
    assert t.precision == "double"
    assert t.sigma2 == pytest.approx(0.5, rel=1e-12)
    assert t.log_sigma(2) == t.log_sigma(3)
    monkeypatch.setenv(logscale.PRECISION_ENV, "quad")
    with pytest.raises(DomainError):
        dyadic_spectrum()


@settings(max_examples=60, deadline=None)
@given(
    vals=st.lists(st.fractions(min_value=Fraction(1, 1000), max_value=1), min_size=1, max_size=12),
    probe=st.integers(1, 12),
)
def test_custom_lookup_and_levels(vals, probe):
    vals = sorted(vals, reverse=True)
    c = custom_spectrum(vals)
    if probe <= len(vals):
        with mpmath.workprec(200):
            assert c.log_sigma(probe) == logscale.log_fixed(vals[probe - 1])
    # level sizes equal run lengths of equal values
    runs = []
    for v in vals:
        if runs and runs[-1][0] == v:
            runs[-1][1] += 1
        else:
            runs.append([v, 1])
    # the last run may continue past the prefix, so only complete runs are compared
    for i, (_, size) in enumerate(runs[:-1]):
        assert c.level(i)[2] == size
