import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcfm.geometry import FrequencyRectangle, IslandKind, WdmComb, enumerate_islands
from pcfm.islands import (NLI_PREFACTOR, FallbackRequired, ModelConfig, Span, SpanParams,
                          f_kernel, g_nli_island, i_nm, k_x_cancellation, k_x_closed,
                          nli_psd_total)
from pcfm.oracle import f_kernel_quadrature, k_x_quadrature
from pcfm.special_functions import script_i, sine_integral, si_over_t_primitive
from pcfm.spp import PolynomialSpp, PowerProfile, fit_polynomial

from conftest import B_CH, BETA2, GAMMA, SPAN, comb_of, rel, sci_rect


def sci_flat_reference(b, L, beta2, p0=1.0):
    x = math.pi ** 2 * beta2 * b ** 2 * L
    return 2 * p0 ** 2 / (math.pi ** 2 * beta2) * (
        L * si_over_t_primitive(x) - L * sine_integral(x) + (1 - math.cos(x)) * L / x)


def test_f_kernel_zero_branch_and_symmetry():
    r = sci_rect()
    assert f_kernel(0.0, r, BETA2) == r.area
    assert f_kernel(1e3, r, 0.0) == r.area
    for u in (1.0, 7e3, 8e4):
        assert f_kernel(-u, r, BETA2) == pytest.approx(f_kernel(u, r, BETA2), rel=1e-15)


def test_f_kernel_continuity_at_zero():
    r = FrequencyRectangle(10e9, 70e9, -40e9, 20e9)
    for u in (1e-12 * SPAN, -1e-12 * SPAN):
        assert f_kernel(u, r, BETA2) == pytest.approx(r.area, rel=1e-8)


def test_f_kernel_is_real_part_of_quadrature(rects):
    for r in rects.values():
        for u in (3e3, 4e4):
            q = f_kernel_quadrature(u, r, BETA2)
            assert abs(f_kernel(u, r, BETA2) - q.real) <= 1e-8 * r.area


def test_i00_sci_matches_script_i():
    r = sci_rect()
    b = 4 * math.pi ** 2 * BETA2
    lam4 = math.pi ** 2 * BETA2 * B_CH ** 2
    # I_00 = 2 K(p0 = 1) = 16 I_{0,1}(L; lam4) / B
    assert i_nm(0, 0, SPAN, r, BETA2) == pytest.approx(16 * script_i(0, 1, SPAN, lam4) / b, rel=1e-13)


def test_i_nm_symmetric(rects):
    for r in rects.values():
        assert i_nm(1, 3, SPAN, r, BETA2) == i_nm(3, 1, SPAN, r, BETA2)


def test_flat_sci_anchor():
    flat = PolynomialSpp((1.0,), SPAN)
    assert k_x_closed(flat, sci_rect(), BETA2) == pytest.approx(sci_flat_reference(B_CH, SPAN, BETA2), rel=1e-12)
    p0 = 0.37
    scaled = PolynomialSpp((p0,), SPAN)
    assert k_x_closed(scaled, sci_rect(), BETA2) == pytest.approx(sci_flat_reference(B_CH, SPAN, BETA2, p0), rel=1e-12)


def test_k_decreases_with_dispersion():
    flat = PolynomialSpp((1.0,), SPAN)
    ks = [k_x_closed(flat, sci_rect(), -b * 1e-27) for b in (1, 3, 10, 20, 30)]
    assert all(b < a for a, b in zip(ks[:-1], ks[1:]))
    qs = [k_x_quadrature(flat, sci_rect(), -b * 1e-27, SPAN) for b in (1, 3, 10, 20, 30)]
    assert all(b < a for a, b in zip(qs[:-1], qs[1:]))


def test_xci_against_oracle(rects, ssmf):
    spp = fit_polynomial(ssmf, SPAN, 8)
    k = k_x_closed(spp, rects["xci"], BETA2)
    assert rel(k, k_x_quadrature(ssmf, rects["xci"], BETA2, SPAN)) <= 1e-3
    assert rel(k, k_x_quadrature(spp, rects["xci"], BETA2, SPAN)) <= 1e-8


def test_degenerate_dispersion_raises():
    with pytest.raises(FallbackRequired):
        k_x_closed(PolynomialSpp((1.0,), SPAN), sci_rect(), 0.0)
    with pytest.raises(FallbackRequired):
        i_nm(0, 0, SPAN, sci_rect(), 1e-45)


def test_transpose_symmetry(rects, ssmf):
    spp = fit_polynomial(ssmf, SPAN, 8)
    for r in rects.values():
        a = k_x_closed(spp, r, BETA2)
        assert k_x_closed(spp, r.transposed(), BETA2) == pytest.approx(a, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.01, 100.0), n=st.integers(0, 6))
def test_quadratic_scaling(s, n):
    c = np.array([1.0, -0.7, 0.2, 0.05, -0.01, 0.003, 0.001])[: n + 1]
    base = PolynomialSpp.from_normalized(c, SPAN)
    scaled = PolynomialSpp.from_normalized(s * c, SPAN)
    r = FrequencyRectangle(50e9, 110e9, -30e9, 30e9)
    bound = 4 * np.finfo(float).eps * k_x_cancellation(base, r, BETA2)
    assert k_x_closed(scaled, r, BETA2) == pytest.approx(s * s * k_x_closed(base, r, BETA2), rel=bound)


def test_cancellation_measure(rects, ssmf):
    spp = fit_polynomial(ssmf, SPAN, 8)
    c = [k_x_cancellation(spp, r, BETA2) for r in rects.values()]
    assert all(x >= 1.0 for x in c)
    # far islands cancel harder
    assert c[0] < c[1] < c[2]


def test_g_nli_island_prefactor():
    comb = WdmComb(comb_of(1).channels[:1], 0)
    isl = enumerate_islands(comb)[0]
    unit = WdmComb((type(comb.cut)(0, comb.cut.center_frequency, B_CH, 1.0),), 0)
    span = SpanParams(SPAN, BETA2, 1.0, cut_end_power=1.0)
    assert g_nli_island(1.0, isl, unit, span) == NLI_PREFACTOR
    assert g_nli_island(0.0, isl, unit, span) == 0.0
    dark = WdmComb((type(comb.cut)(0, comb.cut.center_frequency, B_CH, 0.0),), 0)
    assert g_nli_island(5.0, isl, dark, span) == 0.0
    with pytest.raises(ValueError):
        g_nli_island(-1.0, isl, unit, span)


def _span(profile, L=SPAN, beta2=BETA2):
    return Span(SpanParams(L, beta2, GAMMA), {"ssmf": profile})


def test_single_channel_total_equals_island(ssmf):
    comb = comb_of(1)
    res = nli_psd_total(comb, [_span(ssmf)])
    (c,) = res.spans[0].contributions
    assert c.island.kind is IslandKind.SCI
    spp = fit_polynomial(ssmf, SPAN, 8)
    k = k_x_closed(spp, sci_rect(), BETA2)
    # the engine fits sqrt(p p p / p), equal to p up to rounding
    ref = g_nli_island(k, c.island, comb, SpanParams(SPAN, BETA2, GAMMA), ssmf(SPAN))
    assert res.total == pytest.approx(ref, rel=1e-12)


def test_two_spans_double(ssmf):
    comb = comb_of(3)
    one = nli_psd_total(comb, [_span(ssmf)]).total
    two = nli_psd_total(comb, [_span(ssmf), _span(ssmf)]).total
    assert two == 2 * one


def test_parallel_matches_serial(ssmf):
    comb = comb_of(5)
    a = nli_psd_total(comb, [_span(ssmf)], ModelConfig(jobs=1))
    b = nli_psd_total(comb, [_span(ssmf)], ModelConfig(jobs=4))
    assert [c.g_nli for c in a.spans[0].contributions] == [c.g_nli for c in b.spans[0].contributions]


def test_fallback_on_zero_dispersion(ssmf):
    comb = comb_of(3)
    res = nli_psd_total(comb, [_span(ssmf, beta2=0.0)], ModelConfig(n_p=4))
    assert all(c.fallback for c in res.spans[0].contributions)
    # with no dispersion K = L^2-weighted area of |int p|^2
    spp = res.spans[0].contributions[0].spp
    zint = sum(cn / (n + 1) for n, cn in enumerate(spp.normalized_coefficients)) * SPAN
    c0 = res.spans[0].contributions[0]
    assert c0.k_value == pytest.approx(zint ** 2 * c0.island.rectangle.area, rel=1e-12)


def test_beta2_override(ssmf):
    comb = comb_of(1)
    params = SpanParams(SPAN, BETA2, GAMMA, beta2_eff_override={(0, 0, 0): 2 * BETA2})
    res = nli_psd_total(comb, [Span(params, {"ssmf": ssmf})])
    assert res.spans[0].contributions[0].beta2_eff == 2 * BETA2


def test_flat_five_channel_total_vs_oracle():
    comb = comb_of(5)
    flat = PowerProfile.flat(SPAN)
    span = _span(flat)
    res = nli_psd_total(comb, [span], ModelConfig(n_p=0))
    ref = 0.0
    for c in res.spans[0].contributions:
        kq = k_x_quadrature(flat, c.island.rectangle, BETA2, SPAN)
        ref += g_nli_island(kq, c.island, comb, span.params, 1.0)
    assert rel(res.total, ref) <= 1e-3
