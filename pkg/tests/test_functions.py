import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glucodelay.errors import ConfigError, DomainError
from glucodelay.functions import (FunctionSpec, affine, constant, fa_inner_junction, hill,
                                  hill_decreasing, make_f4_arctan, make_Fa, make_Fb,
                                  make_function, shifted, validate_hypotheses)

CANONICAL = dict(f1=hill(p=2, h=2, c=0.5), f2=hill(p=3, h=1),
                 f4=make_f4_arctan(2, 1, 0.5), f5=hill_decreasing(p=4, h=1))


def test_eval_examples():
    assert make_f4_arctan(2, 1, 1)(0.0) == 2.0
    assert make_Fa(1, 2)(math.pi / 2) == -math.pi / 2
    assert make_Fb(1, 1, 2, 1)(1.0) == -1.0


def test_derivative_examples():
    assert make_f4_arctan(2, 1, 1).derivative(0.0) == 1.0
    assert make_Fb(1, 1, 2, 1).derivative(0.0) == 0.0
    assert affine(3.5).derivative(7.0) == 3.5


def test_make_fa_examples():
    f = make_Fa(1, 2)
    assert f(0.0) == 0.0
    assert f.limit_at_infinity == pytest.approx(-math.pi, abs=1e-15)
    assert f(1.0) == -1.0
    assert f.monotone == "decreasing"


def test_fa_junction_derivative_is_left_sided():
    f = make_Fa(1, 2)
    j = math.pi / 2
    assert not f.is_smooth_at(j)
    assert f.derivative(j) == -1.0
    assert f.derivative(j + 1e-9) == pytest.approx(-2.0, rel=1e-6)


@pytest.mark.parametrize("A,k", [(0, 2), (1, 1), (-1, 3)])
def test_make_fa_rejects_ranges(A, k):
    with pytest.raises(ConfigError):
        make_Fa(A, k)


def test_fa_inner_branch_root():
    assert fa_inner_junction(1.0) == 0.0
    m = fa_inner_junction(10.0)
    assert math.atan(10.0 * m) == pytest.approx(m, abs=1e-15)
    f = make_Fa(1, 20, 10)
    assert f(0.5 * m) == pytest.approx(-math.atan(5.0 * m), abs=1e-15)
    assert f.derivative(0.0) == -10.0


def test_make_fb_examples():
    f = make_Fb(1, 1, 2, 1)
    assert f(0.5) == -0.125
    assert f(1.0) == -1.0
    assert f.limit_at_infinity == pytest.approx(-1 - math.pi / 2, abs=1e-15)


def test_make_f4_arctan_examples():
    f = make_f4_arctan(2, 1, 0.1)
    assert f(0.0) == pytest.approx(0.2, abs=1e-16)
    assert f.limit_at_infinity == pytest.approx(0.1 * (2 + math.pi / 2), abs=1e-15)
    assert f.limit_at_infinity == pytest.approx(0.3571, abs=1e-4)
    with pytest.raises(ConfigError):
        make_f4_arctan(1, 1, 0.1)


def test_hill_domain_error():
    with pytest.raises(DomainError):
        hill(p=1, h=2)(-0.1)


def test_unknown_family_and_missing_params():
    with pytest.raises(ConfigError):
        make_function("cosine", a=1)
    with pytest.raises(ConfigError):
        make_function("hill", p=1)


def test_validate_canonical_passes():
    rep = validate_hypotheses(**CANONICAL)
    assert rep.all_pass, str(rep)
    assert rep.all_pass == all(c.passed for c in rep.checks)


def test_validate_increasing_f5_fails_h5():
    rep = validate_hypotheses(**{**CANONICAL, "f5": hill(p=4, h=1)})
    assert not rep.all_pass
    bad = [c for c in rep.checks if not c.passed]
    assert bad[0].hypothesis == "H5"
    assert bad[0].witness is not None


def test_validate_f1_zero_at_origin_fails_h2():
    rep = validate_hypotheses(**{**CANONICAL, "f1": hill(p=2, h=2)})
    assert [c.hypothesis for c in rep.checks if not c.passed] == ["H2"]


def test_specs_pickle_and_hash():
    import pickle
    f = make_Fa(1, 20, 10)
    g = pickle.loads(pickle.dumps(f))
    assert g == f and hash(g) == hash(f)
    assert g(2.0) == f(2.0)


def test_shifted_spec():
    base = hill(p=2, h=2, c=0.5)
    s = shifted(base, 0.8)
    assert s(0.0) == 0.0
    assert s(0.3) == pytest.approx(base(1.1) - base(0.8), abs=1e-15)
    assert s.domain_lower == -0.8
    assert s.limit_at_infinity == pytest.approx(2.5 - base(0.8))


ODD = [make_Fa(1, 2), make_Fa(1, 20, 10), make_Fb(1, 1, 2, 1), make_Fb(2, 1, 10, 1), make_Fb(1, 3, 4, 2)]


@pytest.mark.parametrize("f", ODD, ids=str)
def test_oddness(f, rng):
    x = rng.uniform(-10, 10, 1000)
    assert np.max(np.abs([f(-v) + f(v) for v in x])) <= 1e-12


@pytest.mark.parametrize("f", ODD, ids=str)
def test_continuity_at_junctions(f):
    for j in f.junctions:
        left, right = f(np.nextafter(j, -np.inf)), f(np.nextafter(j, np.inf))
        assert abs(left - right) <= 1e-12
        assert abs(f(j) - left) <= 1e-12


MONOTONE = ODD + [CANONICAL["f1"], CANONICAL["f2"], CANONICAL["f4"], CANONICAL["f5"],
                  hill(p=1.5, h=3.2, K=2.0, c=0.1), hill_decreasing(p=2, h=1.7)]


@settings(max_examples=200, deadline=None)
@given(idx=st.integers(0, len(MONOTONE) - 1),
       x=st.floats(0, 50, allow_nan=False), dx=st.floats(1e-9, 50, allow_nan=False))
def test_monotonicity(idx, x, dx):
    f = MONOTONE[idx]
    y = x + dx
    if f.monotone == "decreasing":
        assert f(x) >= f(y)
    else:
        assert f(x) <= f(y)


@settings(max_examples=200, deadline=None)
@given(idx=st.integers(0, len(MONOTONE) - 1), x=st.floats(0.01, 20, allow_nan=False))
def test_derivative_matches_finite_difference(idx, x):
    f = MONOTONE[idx]
    h = 1e-6 * max(1.0, x)
    if any(abs(x - j) < 10 * h for j in f.junctions):
        return
    fd = (f(x + h) - f(x - h)) / (2 * h)
    d = f.derivative(x)
    assert abs(fd - d) <= 1e-6 * max(1.0, abs(d))


@pytest.mark.parametrize("f", MONOTONE, ids=str)
def test_limits_match_sampling(f):
    lim = f.limit_at_infinity
    for u in (1e3, 1e6):
        assert abs(f(u) - lim) <= (5e-3 if u == 1e3 else 5e-6) * (1 + abs(lim))


def test_constant_family():
    c = constant(0.3)
    assert c(5.0) == 0.3 and c.derivative(1.0) == 0.0 and c.monotone == "constant"
