import math

import pytest

from tensorpow import logscale
from tensorpow.errors import CountCeilingExceeded, DomainError
from tensorpow.rearrange import tau_topk
from tensorpow.spectra import TorusNorm, cube_h1_spectrum, dyadic_spectrum, torus_spectrum
from tensorpow.tractability import (
    FitPolicy,
    ProblemFamily,
    classify,
    family_from_spec,
    info_complexity,
    smoothness_rule,
)


def topk_complexity(spectrum, d, eps, k):
    top = tau_topk([spectrum] * d, k)
    assert logscale.to_float(top[-1]) < math.log(eps), "oracle window too small"
    t = logscale.log_fixed(eps)
    tol = logscale.tolerance(spectrum.tol_unit, t)
    return sum(1 for v in top if v >= t - tol)


def test_info_complexity_examples():
    assert info_complexity(dyadic_spectrum(), 2, 0.5) == 5
    spec = torus_spectrum(TorusNorm("#", 1.0))
    assert info_complexity(spec, 3, 0.5) == 7
    assert info_complexity(spec, 3, 0.5) == topk_complexity(spec, 3, 0.5, 50)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("eps", [0.5, 0.2, 0.07, 0.01])
def test_info_complexity_matches_enumeration(d, eps):
    for spec in (
        torus_spectrum(TorusNorm("plus", 1.0)),
        torus_spectrum(TorusNorm("star", 2.0, 1.0, (0.0, math.pi))),
        cube_h1_spectrum(),
    ):
        n = info_complexity(spec, d, eps)
        assert n == topk_complexity(spec, d, eps, 2 * n + 20)


def test_info_complexity_errors():
    spec = dyadic_spectrum()
    with pytest.raises(DomainError):
        info_complexity(spec, 2, 0.0)
    with pytest.raises(DomainError):
        info_complexity(spec, 0, 0.5)
    with pytest.raises(CountCeilingExceeded):
        info_complexity(spec, 40, 1e-9, ceiling=10**6)


def test_torus_log_smoothness_is_strongly_polynomial():
    fam = family_from_spec({"family": "torus-hash", "interval": [0, math.pi], "s": {"rule": "ceil_log2"}})
    v = classify(fam)
    assert v.verdict == "strongly-polynomial"
    assert v.slope <= -0.1
    assert all(a > b for a, b in zip(v.a2, v.a2[1:]))
    assert any(n is not None for _, _, n in v.evidence)
    assert "strongly-polynomial" in v.statement


def test_torus_constant_smoothness_is_not_polynomial():
    fam = family_from_spec({"family": "torus-plus", "s": 2})
    v = classify(fam, d_range=(4, 8, 16, 32))
    assert v.verdict == "not-polynomial"
    assert v.ratio == pytest.approx(1.0)


def test_cube_is_not_polynomial():
    fam = family_from_spec({"family": "cube", "s": 1})
    v = classify(fam, d_range=(2, 4, 8, 16, 32))
    assert v.verdict == "not-polynomial"
    assert min(v.a2) >= 0.27735


def test_sqrt_smoothness_is_strongly_polynomial():
    fam = family_from_spec({"family": "torus-hash", "interval": [0, math.pi], "s": {"rule": "sqrt"}})
    assert classify(fam).verdict == "strongly-polynomial"


def test_diagnostics_make_the_verdict_inconclusive():
    # a family whose univariate norm is not one
    fam = family_from_spec({"family": "jacobi", "alpha": 0, "beta": 0, "s": 1})
    fam_big = ProblemFamily(lambda d: torus_spectrum(TorusNorm("plus", 1.0 + 1.0 / d)), "s decreasing")
    v = classify(fam_big, d_range=(2, 4, 8, 16))
    assert v.verdict == "inconclusive"
    assert any("increases" in m for m in v.diagnostics)
    assert classify(fam, d_range=(2, 4, 8, 16)).verdict == "not-polynomial"


def test_slow_decay_is_inconclusive_under_a_strict_policy():
    fam = family_from_spec({"family": "torus-hash", "interval": [0, math.pi], "s": {"rule": "log", "scale": 0.3}})
    v = classify(fam, fit_policy=FitPolicy(slope_max=-5.0))
    assert v.verdict == "inconclusive"


def test_classify_validation():
    fam = family_from_spec({"family": "torus-hash", "s": 1})
    with pytest.raises(DomainError):
        classify(fam, d_range=(2, 4, 8))
    with pytest.raises(DomainError):
        family_from_spec({"s": 1})
    with pytest.raises(DomainError):
        family_from_spec({"family": "cube", "s": 3})(4)
    with pytest.raises(DomainError):
        family_from_spec({"family": "nope", "s": 1})(4)
    with pytest.raises(DomainError):
        smoothness_rule({"rule": "cubic"})


def test_smoothness_rules():
    assert smoothness_rule(2)(100) == 2
    assert smoothness_rule({"rule": "ceil_log2"})(9) == 4
    assert smoothness_rule({"rule": "ceil_log2"})(1) == 1
    assert smoothness_rule({"rule": "sqrt", "scale": 2})(16) == 8
    assert smoothness_rule({"rule": "power", "exponent": 0.5})(16) == 4
    assert smoothness_rule({"rule": "linear"})(7) == 7
    assert smoothness_rule({"rule": "log", "min": 0.5})(1) == 0.5


def test_thread_count_does_not_change_the_verdict():
    fam = family_from_spec({"family": "torus-hash", "interval": [0, math.pi], "s": {"rule": "ceil_log2"}})
    a = classify(fam, d_range=(4, 8, 16, 32), threads=1)
    b = classify(fam, d_range=(4, 8, 16, 32), threads=3)
    assert a.as_dict() == b.as_dict()
