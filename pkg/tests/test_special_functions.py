import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcfm.special_functions import (DomainError, SpecialFnConfig, UnitSiTable, beta_integer,
                                    cosine_integral, script_i, sine_integral, sine_moment,
                                    si_over_t_primitive)

# reference values from independent 30-digit quadrature
SI_PI = 1.8519370519824661704
CI_2 = 0.4229808287748649957
J_1 = 0.98181079939135808871
S3_1_5 = -0.14898189211322087916
I23_PIN = 4369066666333785669.0


def test_sine_integral_values():
    assert sine_integral(0.0) == 0.0
    assert sine_integral(math.pi) == pytest.approx(SI_PI, rel=1e-15)
    assert abs(sine_integral(1e6) - math.pi / 2) < 1e-5
    assert sine_integral(-2.0) == -sine_integral(2.0)


def test_cosine_integral_values():
    assert cosine_integral(2.0) == pytest.approx(CI_2, abs=1e-10)
    assert abs(cosine_integral(1e8)) < 1e-7
    x = 1e-8
    assert cosine_integral(x) - math.log(x) == pytest.approx(0.5772156649015329, abs=1e-12)
    with pytest.raises(DomainError):
        cosine_integral(0.0)


def test_non_finite_rejected():
    for fn in (sine_integral, si_over_t_primitive):
        with pytest.raises(DomainError):
            fn(float("nan"))


def test_beta_integer():
    assert beta_integer(1, 0) == 1.0
    assert beta_integer(2, 1) == pytest.approx(1 / 6, rel=1e-16)
    assert beta_integer(5, 4) == pytest.approx(math.factorial(4) ** 2 / math.factorial(9), rel=1e-16)
    # large orders stay finite through exact integer arithmetic
    assert beta_integer(200, 200) > 0
    with pytest.raises(DomainError):
        beta_integer(0, 1)


def test_sine_moment_examples():
    L, lam = 3.0, 0.7
    assert sine_moment(0, L, lam) == pytest.approx((1 - math.cos(lam * L)) / lam, rel=1e-14)
    assert sine_moment(4, L, 0.0) == 0.0
    assert sine_moment(3, 1.0, 5.0) == pytest.approx(S3_1_5, rel=1e-10)
    with pytest.raises(DomainError):
        sine_moment(-1, 1.0, 1.0)


@pytest.mark.parametrize("k", [0, 1, 2, 5, 9, 14])
@pytest.mark.parametrize("X", [0.3, 1.7, 6.0, 12.0, 16.0, 40.0])
def test_sine_moment_branch_agreement(k, X):
    if abs(X - (k + 1)) < 8:
        # overlap region: the two forms must agree with each other directly
        assert sine_moment(k, 1.0, X, method="series") == pytest.approx(
            sine_moment(k, 1.0, X, method="closed"), rel=1e-9, abs=1e-14)
    s = sine_moment(k, 1.0, X, method="series")
    c = sine_moment(k, 1.0, X, method="closed")
    ref = float(mp.quad(lambda u: u ** k * mp.sin(X * u), mp.linspace(0, 1, 2 + int(X))))
    # each form is checked where it is well conditioned (the series terms grow
    # like e^X / X^k, the alternating finite sum like k! / X^k)
    if X < k + 8:
        assert s == pytest.approx(ref, rel=1e-11, abs=1e-15)
    if X >= k + 1:
        assert c == pytest.approx(ref, rel=1e-10, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 20), X=st.floats(1e-6, 200.0))
def test_sine_moment_against_mpmath(k, X):
    ref = float(mp.quad(lambda u: u ** k * mp.sin(X * u), mp.linspace(0, 1, 2 + int(X / 3))))
    got = sine_moment(k, 1.0, X)
    assert abs(got - ref) <= 1e-12 * max(abs(ref), 1.0 / (k + 1) * 1e-3)


def test_j_values_and_oddness():
    assert si_over_t_primitive(0.0) == 0.0
    assert si_over_t_primitive(1.0) == pytest.approx(J_1, rel=1e-10)
    for X in (0.5, 3.0, 50.0):
        assert si_over_t_primitive(-X) == -si_over_t_primitive(X)


@pytest.mark.parametrize("X", [0.2, 5.0, 11.9, 12.1, 25.0, 39.9, 40.1, 90.0, 1e4])
def test_j_derivative_is_si_over_x(X):
    h = 1e-4
    d = (si_over_t_primitive(X + h) - si_over_t_primitive(X - h)) / (2 * h)
    assert d == pytest.approx(sine_integral(X) / X, rel=1e-6)


@pytest.mark.parametrize("X", [12.0, 40.0])
def test_j_continuous_at_switches(X):
    cfg = SpecialFnConfig()
    lo = si_over_t_primitive(X * (1 - 1e-12), cfg)
    hi = si_over_t_primitive(X * (1 + 1e-12), cfg)
    assert hi == pytest.approx(lo, rel=1e-12)


@pytest.mark.parametrize("X", [0.01, 2.0, 30.0, 333.0, 5e3])
def test_j_against_mpmath(X):
    ref = float(mp.mpf(X) * mp.hyp2f3(0.5, 0.5, 1.5, 1.5, 1.5, -mp.mpf(X) ** 2 / 4))
    assert si_over_t_primitive(X) == pytest.approx(ref, rel=1e-13)


def test_script_i_p0_q1_identity_and_sign():
    L, lam = 80e3, 3.1e-4
    x = lam * L
    expect = L * si_over_t_primitive(x) - L * sine_integral(x) + (1 - math.cos(x)) / lam
    assert script_i(0, 1, L, lam) == pytest.approx(expect, rel=1e-13)
    assert script_i(0, 1, L, -lam) == -script_i(0, 1, L, lam)


def test_script_i_pinned_small_argument():
    # lam L = 8e-5: series branch
    assert script_i(2, 3, 80e3, 1e-9) == pytest.approx(I23_PIN, rel=1e-8)


def test_script_i_branches_agree_near_switch():
    for X in (0.099, 0.101):
        t = UnitSiTable(X)
        for p, q in [(0, 0), (0, 3), (1, 0), (2, 5), (4, 4)]:
            assert t.script_i(p, q, "series") == pytest.approx(t.script_i(p, q, "closed"), rel=1e-9)


def test_script_i_zero_lambda_and_domain():
    assert script_i(3, 2, 10.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        script_i(-1, 2, 1.0, 1.0)
    with pytest.raises(DomainError):
        script_i(1, 2, 0.0, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        SpecialFnConfig(series_switch_threshold=-1.0)
    with pytest.raises(ValueError):
        SpecialFnConfig(hypergeometric_switch=50.0, asymptotic_switch=40.0)


def test_vectorless_scalars_are_floats():
    assert isinstance(script_i(1, 1, 1.0, 2.0), float)
    assert np.isfinite(si_over_t_primitive(1e300))
