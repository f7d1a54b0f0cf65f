import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorpow import logscale
from tensorpow.errors import CountCeilingExceeded, DomainError
from tensorpow.hypercount import (
    CountQuery,
    a2_coarse_bounds,
    a2_sandwich,
    a_count,
    count_at_least,
    dyadic_cumulative,
    dyadic_level_count,
    tensor_count,
    tensor_count_pair,
)
from tensorpow.spectra import TorusNorm, custom_spectrum, dyadic_spectrum, torus_spectrum


def brute_a(N, r, l):
    # walk every tuple of integers >= N, pruning once the product exceeds r
    if l == 0:
        return 1 if r >= 1 else 0
    total, k = 0, N
    while k * N ** (l - 1) <= r:
        total += brute_a(N, Fraction(r) / k, l - 1)
        k += 1
    return total


def harmonic():
    return custom_spectrum([1.0, 0.5], tail=(1.0, 1.0), label="1/n")


def test_a_count_examples():
    assert a_count(2, 10, 1) == 9
    assert a_count(2, 3.9, 2) == 0
    assert a_count(2, 4, 2) == 1
    assert a_count(1, 4, 2) == 8
    assert a_count(3, 0.5, 3) == 0
    assert a_count(1, 0.99, 1) == 0


def test_a_count_rejects_bad_arguments():
    with pytest.raises(DomainError):
        a_count(0, 10, 2)
    with pytest.raises(DomainError):
        a_count(2, 10, 0)


@settings(max_examples=150, deadline=None)
@given(N=st.integers(1, 4), r=st.floats(0, 400, allow_nan=False), l=st.integers(1, 4))
def test_a_count_matches_enumeration(N, r, l):
    assert a_count(N, r, l) == brute_a(N, r, l)


@settings(max_examples=150, deadline=None)
@given(N=st.integers(1, 5), r=st.floats(0, 10**4, allow_nan=False), l=st.integers(1, 5))
def test_a_count_recursion(N, r, l):
    rhs = sum(a_count(N, r / k, l) for k in range(N, int(r // N**l) + 1))
    assert a_count(N, r, l + 1) == rhs


@settings(max_examples=100, deadline=None)
@given(r=st.integers(0, 10**4), l=st.integers(1, 6))
def test_binomial_identity(r, l):
    rhs = (1 if r >= 1 else 0) + sum(math.comb(l, m) * a_count(2, r, m) for m in range(1, l + 1))
    assert a_count(1, r, l) == rhs


@settings(max_examples=100, deadline=None)
@given(N=st.integers(1, 4), r=st.floats(0, 2000), dr=st.floats(0, 500), l=st.integers(1, 4))
def test_a_count_monotone(N, r, dr, l):
    assert a_count(N + 1, r, l) <= a_count(N, r, l) <= a_count(N, r + dr, l)


def test_sandwich_examples():
    lo, hi = a2_sandwich(16, 2)
    assert lo == pytest.approx(16 * (math.log(4) - 1), rel=1e-14)
    assert hi == pytest.approx(16 * math.log(16), rel=1e-14)
    assert lo <= a_count(2, 16, 2) == 19 <= hi
    lo, hi = a2_sandwich(10**6, 3)
    assert lo <= a_count(2, 10**6, 3) <= hi
    with pytest.raises(DomainError):
        a2_sandwich(15, 2)
    with pytest.raises(DomainError):
        a2_sandwich(100, 1)


@pytest.mark.parametrize("l", [2, 3, 4, 5])
def test_sandwich_brackets_on_a_grid(l):
    rs = sorted({4**l, 4**l + 1, 4**l + 13} | {int(4**l * 1.37**k) for k in range(1, 40)})
    for r in [r for r in rs if r <= 10**6]:
        lo, hi = a2_sandwich(r, l)
        assert lo <= a_count(2, r, l) <= hi


def test_coarse_bounds_examples():
    lo, hi = a2_coarse_bounds(10, 1, 1.0)
    assert (lo, hi) == (pytest.approx(10 / 3), pytest.approx(100.0))
    assert a2_coarse_bounds(3, 2, 1.0)[0] == 0.0
    assert a2_coarse_bounds(100, 4, 0.5)[1] == pytest.approx(8000.0)
    with pytest.raises(DomainError):
        a2_coarse_bounds(10, 2, 0.0)


@settings(max_examples=100, deadline=None)
@given(r=st.integers(1, 10**6), l=st.integers(1, 5), delta=st.floats(0.05, 1.0))
def test_coarse_bounds_bracket(r, l, delta):
    lo, hi = a2_coarse_bounds(r, l, delta)
    assert lo <= a_count(2, r, l) <= hi


def test_dyadic_closed_forms():
    assert dyadic_level_count(0, 5) == 1
    assert dyadic_level_count(1, 2) == 4
    assert dyadic_level_count(3, 3) == 80
    assert dyadic_cumulative(1, 2) == 5
    assert dyadic_level_count(-1, 3) == 0


def test_tensor_count_examples():
    h = harmonic()
    assert tensor_count(CountQuery.from_value([h, h], Fraction(1, 4))) == 8 == a_count(1, 4, 2)
    assert tensor_count(CountQuery.from_value([h] * 5, 1)) == 1
    d = dyadic_spectrum()
    assert tensor_count(CountQuery.from_value([d, d], 0.5)) == 5
    with pytest.raises(DomainError):
        CountQuery([], 0)
    with pytest.raises(DomainError):
        CountQuery([h], 0, "<")


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 6])
def test_dyadic_counts(d):
    spec = dyadic_spectrum()
    log2 = logscale.log_fixed(2)
    for k in range(13):
        ge, gt = tensor_count_pair([spec] * d, -k * log2)
        assert ge == dyadic_cumulative(k, d)
        assert ge - gt == dyadic_level_count(k, d)


def test_harmonic_counts_are_divisor_sums():
    # #{n in N^d : prod n_j <= r} = A_1(r, d)
    h = harmonic()
    for d in (2, 3, 4):
        for r in (1, 7, 60, 500):
            q = CountQuery.from_value([h] * d, Fraction(1, r))
            assert tensor_count(q) == a_count(1, r, d)


spectrum_values = st.lists(
    st.sampled_from([Fraction(1, k) for k in (2, 3, 4, 5, 6, 8, 9, 12, 16)]), min_size=1, max_size=6
)


@settings(max_examples=60, deadline=None)
@given(
    vals=spectrum_values,
    other=spectrum_values,
    d=st.integers(1, 4),
    hetero=st.booleans(),
    t=st.sampled_from([Fraction(1, k) for k in (1, 2, 3, 4, 6, 9, 16, 36, 64, 100)]),
)
def test_tensor_count_matches_enumeration(vals, other, d, hetero, t):
    # finite-rank spectra make the brute force complete; exact ties are common here
    a = custom_spectrum([Fraction(1)] + sorted(vals, reverse=True), finite_rank=True)
    b = custom_spectrum([Fraction(1)] + sorted(other, reverse=True), finite_rank=True)
    spectra = [a if (j % 2 == 0 or not hetero) else b for j in range(d)]
    values = [[Fraction(1)] + sorted(v, reverse=True) for v in (vals, other)]
    axes = [values[0] if (j % 2 == 0 or not hetero) else values[1] for j in range(d)]
    prods = [math.prod(p) for p in itertools.product(*axes)]
    ge, gt = tensor_count_pair(spectra, logscale.log_fixed(t))
    assert ge == sum(1 for p in prods if p >= t)
    assert gt == sum(1 for p in prods if p > t)


@settings(max_examples=40, deadline=None)
@given(d=st.integers(1, 4), e1=st.integers(0, 40), e2=st.integers(0, 40))
def test_tensor_count_monotone_in_threshold(d, e1, e2):
    spec = torus_spectrum(TorusNorm("plus", 1.0))
    lo, hi = sorted((e1, e2))
    c_hi = tensor_count(CountQuery.from_value([spec] * d, 2.0 ** (-lo / 4)))
    c_lo = tensor_count(CountQuery.from_value([spec] * d, 2.0 ** (-hi / 4)))
    assert c_hi <= c_lo


def test_heterogeneous_is_permutation_invariant():
    a = torus_spectrum(TorusNorm("hash", 1.0))
    b = custom_spectrum([1.0, 0.7, 0.3], tail=(0.5, 1.2))
    c = dyadic_spectrum()
    t = logscale.log_fixed(0.01)
    ref = tensor_count_pair([a, b, c], t)
    for perm in itertools.permutations([a, b, c]):
        assert tensor_count_pair(list(perm), t) == ref


def test_ceiling_and_early_exit():
    d = dyadic_spectrum()
    q = CountQuery([d] * 4, -300 * logscale.log_fixed(2))
    with pytest.raises(CountCeilingExceeded):
        tensor_count(q)
    assert tensor_count(q, ceiling=None) == dyadic_cumulative(300, 4)
    assert count_at_least(q, 10**6)
    h = harmonic()
    q = CountQuery.from_value([h, h], Fraction(1, 4))
    assert count_at_least(q, 8)
    assert not count_at_least(q, 9)
    with pytest.raises(CountCeilingExceeded):
        tensor_count(q, ceiling=7)


def test_threshold_above_top_counts_nothing():
    t = torus_spectrum(TorusNorm("star", 2.0))
    assert tensor_count(CountQuery.from_value([t] * 3, 1.5)) == 0
    assert tensor_count(CountQuery.from_value([t] * 3, 1.0, ">")) == 0
