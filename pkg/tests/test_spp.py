import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcfm.spp import (NP_MAX, PolynomialSpp, PowerProfile, ProfileError, compose_island_profile,
                      db_per_km_to_neper_per_m, evaluate_polynomial, evaluate_profile,
                      fit_polynomial, load_profile_csv)

L = 80e3


def test_db_conversion():
    # 0.2 dB/km of power loss, expressed as a power exponent in 1/m
    a = db_per_km_to_neper_per_m(0.2)
    assert 10 * math.log10(math.exp(-a * 1e3)) == pytest.approx(-0.2, rel=1e-14)


def test_exponential_values():
    p = PowerProfile.exponential_db(0.2, L)
    assert p(0.0) == 1.0
    assert p(50e3) == pytest.approx(10 ** (-0.2 * 50 / 10), rel=1e-14)
    assert PowerProfile.exponential(0.0, L)(31e3) == 1.0


def test_profile_domain_errors():
    p = PowerProfile.flat(L)
    with pytest.raises(ProfileError):
        p(-1.0)
    with pytest.raises(ProfileError):
        p(L * 1.01)
    with pytest.raises(ProfileError):
        PowerProfile.exponential(1e-5, -1.0)
    with pytest.raises(ProfileError):
        PowerProfile("bogus", L)


def test_lumped_loss_and_tilt():
    a = db_per_km_to_neper_per_m(0.2)
    p = PowerProfile.lumped_loss(a, L, 40e3, 3.0)
    assert p.breakpoints == (40e3,)
    assert p(39e3) == pytest.approx(math.exp(-a * 39e3))
    assert p(41e3) == pytest.approx(math.exp(-a * 41e3) * 10 ** -0.3)
    t = PowerProfile.linear_db_tilt(-6.0, L)
    assert 10 * math.log10(t(L)) == pytest.approx(-6.0, rel=1e-12)
    assert 10 * math.log10(t(L / 2)) == pytest.approx(-3.0, rel=1e-12)


def test_tabulated_and_csv(tmp_path):
    z = np.linspace(0, L, 41)
    f = tmp_path / "p.csv"
    f.write_text("z_m,power\n" + "".join(f"{zi:.17g},{math.exp(-4.6e-5 * zi):.17g}\n" for zi in z))
    p = load_profile_csv(f, L)
    assert p.kind == "tabulated"
    assert p(L / 3) == pytest.approx(math.exp(-4.6e-5 * L / 3), rel=1e-4)
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n10,0.9\n")
    with pytest.raises(ProfileError):
        load_profile_csv(bad, L)
    with pytest.raises(ProfileError):
        PowerProfile.tabulated([(0, 1), (0, 1), (L, 0.5)], L)


def test_compose_island_profile():
    a = [1e-5, 2e-5, 3e-5, 4e-5]
    ps = [PowerProfile.exponential(x, L) for x in a]
    isl = compose_island_profile(*ps)
    z = np.linspace(0, L, 7)
    assert np.allclose(isl(z), np.exp(-(a[0] + a[1] + a[2] - a[3]) * z / 2), rtol=1e-14)
    same = ps[2]
    assert np.allclose(compose_island_profile(same, same, same, same)(z), same(z), rtol=1e-15)
    flat = PowerProfile.flat(L)
    assert np.all(compose_island_profile(flat, flat, flat, flat)(z) == 1.0)


def test_fit_trivial_cases():
    spp = fit_polynomial(PowerProfile.flat(L), L, 0)
    assert spp.coefficients == pytest.approx((1.0,), abs=1e-15)
    assert spp.fit_max_residual < 1e-15
    lin = fit_polynomial(lambda z: 1.0 - np.asarray(z) / L, L, 1)
    assert lin.coefficients[0] == pytest.approx(1.0, rel=1e-14)
    assert lin.coefficients[1] == pytest.approx(-1.0 / L, rel=1e-13)


def test_fit_exponential_pin(ssmf):
    spp = fit_polynomial(ssmf, L, 8)
    # regression pin: 80 km, 0.2 dB/km, N_p = 8
    assert spp.fit_max_residual < 1e-6
    assert spp.fit_max_residual == pytest.approx(4.985e-7, rel=1e-3)
    assert spp.warning is None
    assert abs(spp(L / 2) - ssmf(L / 2)) <= spp.fit_max_residual


def test_fit_residual_decreases_with_order(ssmf):
    res = [fit_polynomial(ssmf, L, n).fit_max_residual for n in range(NP_MAX + 1)]
    assert all(b < a for a, b in zip(res[:-1], res[1:]))


def test_fit_warns_on_lumped_loss():
    p = PowerProfile.lumped_loss(db_per_km_to_neper_per_m(0.2), L, 30e3, 2.0)
    spp = fit_polynomial(p, L, 8)
    assert spp.warning is not None
    assert spp.fit_max_residual > 1e-2


def test_fit_order_bounds(ssmf):
    with pytest.raises(ProfileError):
        fit_polynomial(ssmf, L, NP_MAX + 1)
    with pytest.raises(ProfileError):
        fit_polynomial(ssmf, L, 3, nodes=2)


def test_polynomial_evaluation():
    assert evaluate_polynomial(PolynomialSpp((1.0,), 5.0), 3.3) == 1.0
    assert evaluate_polynomial(PolynomialSpp((1e-300 + 1.0, 1.0), 5.0), 2.0) == pytest.approx(3.0)
    with pytest.raises(ProfileError):
        PolynomialSpp((0.0, 1.0), 5.0)
    spp = PolynomialSpp.from_normalized([1.0, -0.5, 0.25], L)
    assert np.allclose(spp.normalized_coefficients, [1.0, -0.5, 0.25], rtol=1e-15)


@settings(max_examples=40, deadline=None)
@given(c=st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=7))
def test_fit_reproduces_polynomials(c):
    c = [1.5] + c
    target = PolynomialSpp.from_normalized(c, L)
    spp = fit_polynomial(target, L, len(c) - 1)
    assert np.allclose(spp.normalized_coefficients, c, atol=1e-10)
