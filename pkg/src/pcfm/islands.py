"""Closed-form island integrals K_x and the per-island NLI PSD.

The core integral of an island over the rectangle [a_k, b_k] x [c_m, d_m]
and a span of length L,

    K_x = int int | int_0^L p_x(z) exp(j B f1 f2 z) dz |^2 df1 df2,
    B   = 4 pi^2 beta2_eff,

is evaluated for a polynomial p_x(z) = sum_n p_n z^n as a quadratic form in
the coefficients, whose entries I_nm reduce to the one-dimensional integrals
I_{p,q}(L; lam_k) of :mod:`pcfm.special_functions`.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from scipy import special

from .geometry import (Island, IslandKind, WdmComb, FrequencyRectangle, dispersion_scale,
                       enumerate_islands, lambda_coefficients)
from .oracle import QuadratureConfig, k_x_quadrature
from .special_functions import DEFAULT_CONFIG, SpecialFnConfig, UnitSiTable, binomial
from .spp import PolynomialSpp, PowerProfile, compose_island_profile, fit_polynomial

__all__ = [
    "FallbackRequired",
    "InternalConsistencyError",
    "SpanParams",
    "Span",
    "ModelConfig",
    "NliContribution",
    "SpanResult",
    "NliResult",
    "f_kernel",
    "i_nm",
    "k_x_closed",
    "k_x_cancellation",
    "g_nli_island",
    "nli_psd_total",
]

log = logging.getLogger(__name__)

DEGENERATE_DISPERSION = 1e-40
NLI_PREFACTOR = 16.0 / 27.0


class FallbackRequired(ArithmeticError):
    """Dispersion too small for the closed form; use the quadrature oracle."""


class InternalConsistencyError(ArithmeticError):
    """The closed form produced a clearly negative K_x."""


def f_kernel(u: float, rect: FrequencyRectangle, beta2_eff: float) -> float:
    """Real frequency kernel F(u): sum_k (-1)^k Si(lam_k u) / (B u), or the area if B u = 0.

    Equals the real part of the rectangle integral of exp(j B f1 f2 u);
    the imaginary part is odd in u and drops out of every I_nm.
    """
    bu = dispersion_scale(beta2_eff) * u
    if bu == 0.0:
        return rect.area
    lams = lambda_coefficients(rect, beta2_eff)
    si = special.sici([lam * u for lam in lams])[0]
    return math.fsum((-1) ** (k + 1) * si[k] for k in range(4)) / bu


def _check_dispersion(beta2_eff, threshold):
    bfrak = dispersion_scale(beta2_eff)
    if not math.isfinite(bfrak):
        raise ValueError("beta2_eff must be finite")
    if abs(bfrak) < threshold:
        raise FallbackRequired(f"|4 pi^2 beta2_eff| = {abs(bfrak):.3g} below {threshold:g}")
    return bfrak


def _unit_tables(rect, beta2_eff, L, cfg):
    return [UnitSiTable(lam * L, cfg) for lam in lambda_coefficients(rect, beta2_eff)]


def _i_nm_terms(n, m, tables):
    # bracket of the unit-interval I_nm, one term per (k, i|j) for fsum
    terms = []
    for k, tab in enumerate(tables):
        sign = (-1) ** (k + 1)
        for i in range(n + 1):
            q = m + n - i + 1
            terms.append(sign * binomial(n, i) * tab.script_i(i, q) / q)
        for j in range(m + 1):
            q = m + n - j + 1
            terms.append(sign * binomial(m, j) * tab.script_i(j, q) / q)
    return terms


def i_nm(n: int, m: int, L: float, rect: FrequencyRectangle, beta2_eff: float,
         cfg: SpecialFnConfig = DEFAULT_CONFIG,
         degenerate_threshold: float = DEGENERATE_DISPERSION) -> float:
    """I_nm = int int (z1^n z2^m + z1^m z2^n) F(z1 - z2) dz1 dz2 over [0, L]^2, closed form."""
    bfrak = _check_dispersion(beta2_eff, degenerate_threshold)
    n, m = min(n, m), max(n, m)
    tables = _unit_tables(rect, beta2_eff, L, cfg)
    return 2.0 * L ** (n + m + 1) / bfrak * math.fsum(_i_nm_terms(n, m, tables))


def _k_terms(spp, rect, beta2_eff, cfg, degenerate_threshold):
    bfrak = _check_dispersion(beta2_eff, degenerate_threshold)
    L = spp.span_length
    c = spp.normalized_coefficients
    tables = _unit_tables(rect, beta2_eff, L, cfg)
    # p_n p_m L^(n+m+1) = c_n c_m L
    scale = 2.0 * L / bfrak
    terms = []
    for n in range(c.size):
        for m in range(n, c.size):
            w = (1.0 if n == m else 2.0) / 2.0 * c[n] * c[m] * scale
            if w == 0.0:
                continue
            terms.extend(w * t for t in _i_nm_terms(n, m, tables))
    return terms


def k_x_closed(spp: PolynomialSpp, rect: FrequencyRectangle, beta2_eff: float,
               cfg: SpecialFnConfig = DEFAULT_CONFIG,
               degenerate_threshold: float = DEGENERATE_DISPERSION,
               eps_num: float = 1e-9) -> float:
    """Closed-form K_x for a polynomial island profile.

    Accumulates ((2 - delta_nm)/2) p_n p_m I_nm with n outer, m inner and
    the four lambda terms innermost, summed exactly rounded. A result in
    [-eps_num * sum|terms|, 0) is clamped to zero; anything more negative
    raises :class:`InternalConsistencyError`.
    """
    terms = _k_terms(spp, rect, beta2_eff, cfg, degenerate_threshold)
    total = math.fsum(terms)
    if total < 0.0:
        bound = eps_num * math.fsum(abs(t) for t in terms)
        if total < -bound:
            raise InternalConsistencyError(f"K_x = {total!r} below -{bound!r}")
        total = 0.0
    return total


def k_x_cancellation(spp: PolynomialSpp, rect: FrequencyRectangle, beta2_eff: float,
                     cfg: SpecialFnConfig = DEFAULT_CONFIG,
                     degenerate_threshold: float = DEGENERATE_DISPERSION) -> float:
    """sum|terms| / |K_x|: how much relative rounding in the terms is amplified."""
    terms = _k_terms(spp, rect, beta2_eff, cfg, degenerate_threshold)
    total = abs(math.fsum(terms))
    return math.inf if total == 0.0 else math.fsum(abs(t) for t in terms) / total


# --- NLI assembly ---------------------------------------------------------


@dataclass(frozen=True)
class SpanParams:
    span_length: float                      # m
    beta2: float                            # s^2/m
    gamma_x: float                          # 1/(W m)
    big_gamma: float = 1.0
    cut_end_power: float | None = None      # p_CUT(L); None -> taken from the CUT profile
    beta2_eff_override: dict = field(default_factory=dict)   # (m, k, n) -> s^2/m

    def __post_init__(self):
        if not self.span_length > 0:
            raise ValueError("span_length must be > 0")
        if not self.gamma_x > 0:
            raise ValueError("gamma_x must be > 0")
        if not self.big_gamma > 0:
            raise ValueError("big_gamma must be > 0")
        if self.cut_end_power is not None and not self.cut_end_power > 0:
            raise ValueError("cut_end_power must be > 0")

    def beta2_for(self, island: Island) -> float:
        return self.beta2_eff_override.get((island.m_ch, island.k_ch, island.n_ch), self.beta2)


@dataclass(frozen=True)
class Span:
    """Span parameters plus the profile registry its channels refer to."""

    params: SpanParams
    profiles: dict

    def profile(self, comb: WdmComb, index: int) -> PowerProfile:
        return self.profiles[comb.channel(index).profile_id]


@dataclass(frozen=True)
class ModelConfig:
    n_p: int = 8
    island_mode: str = "skip"
    degenerate_threshold: float = DEGENERATE_DISPERSION
    special: SpecialFnConfig = DEFAULT_CONFIG
    oracle: QuadratureConfig = QuadratureConfig()
    jobs: int = 1


@dataclass(frozen=True)
class NliContribution:
    island: Island
    k_value: float
    g_nli: float
    beta2_eff: float
    spp: PolynomialSpp | None = None
    fallback: bool = False


@dataclass(frozen=True)
class SpanResult:
    span: int
    contributions: tuple
    skipped: tuple

    @property
    def total(self) -> float:
        return math.fsum(c.g_nli for c in self.contributions)


@dataclass(frozen=True)
class NliResult:
    cut_index: int
    spans: tuple
    accumulation: str = "incoherent"

    @property
    def total(self) -> float:
        return math.fsum(s.total for s in self.spans)


def g_nli_island(k_value: float, island: Island, comb: WdmComb, span: SpanParams,
                 cut_end_power: float | None = None) -> float:
    """(16/27) Gamma G_m G_k G_n gamma^2 p_CUT(L) K_x."""
    if k_value < 0:
        raise ValueError("K_x must be >= 0")
    p_end = span.cut_end_power if cut_end_power is None else cut_end_power
    if p_end is None:
        raise ValueError("cut_end_power not known")
    g = (comb.channel(island.m_ch).launch_psd * comb.channel(island.k_ch).launch_psd
         * comb.channel(island.n_ch).launch_psd)
    return NLI_PREFACTOR * span.big_gamma * g * span.gamma_x ** 2 * p_end * k_value


def island_polynomial(island: Island, comb: WdmComb, span: Span, n_p: int) -> PolynomialSpp:
    prof = compose_island_profile(span.profile(comb, island.m_ch), span.profile(comb, island.k_ch),
                                  span.profile(comb, island.n_ch), span.profile(comb, comb.cut_index))
    return fit_polynomial(prof, span.params.span_length, n_p)


def island_profile(island: Island, comb: WdmComb, span: Span):
    return compose_island_profile(span.profile(comb, island.m_ch), span.profile(comb, island.k_ch),
                                  span.profile(comb, island.n_ch), span.profile(comb, comb.cut_index))


def _cut_end_power(comb, span: Span):
    if span.params.cut_end_power is not None:
        return span.params.cut_end_power
    return float(span.profile(comb, comb.cut_index)(span.params.span_length))


def evaluate_island(island: Island, comb: WdmComb, span: Span, model: ModelConfig,
                    p_end: float) -> NliContribution:
    beta2 = span.params.beta2_for(island)
    spp = island_polynomial(island, comb, span, model.n_p)
    if spp.warning:
        log.warning("island (%s, %s, %s): %s", island.m_ch, island.k_ch, island.n_ch, spp.warning)
    fallback = False
    try:
        k = k_x_closed(spp, island.rectangle, beta2, model.special, model.degenerate_threshold)
    except FallbackRequired:
        k = k_x_quadrature(spp, island.rectangle, beta2, spp.span_length, model.oracle)
        fallback = True
    g = g_nli_island(k, island, comb, span.params, p_end)
    return NliContribution(island, k, g, beta2, spp, fallback)


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def nli_psd_total(comb: WdmComb, spans, model: ModelConfig = ModelConfig()) -> NliResult:
    """Per-span island contributions at f_CUT and their incoherent (plain) sum.

    Islands are evaluated independently and reported in canonical
    (k_ch, m_ch) frequency order whatever the worker count.
    """
    if not spans:
        raise ValueError("at least one span is required")
    islands = enumerate_islands(comb, model.island_mode)
    active = [isl for isl in islands if not isl.skipped]
    skipped = tuple(isl for isl in islands if isl.skipped)
    results = []
    for s_idx, span in enumerate(spans):
        p_end = _cut_end_power(comb, span)
        contribs = _map(lambda isl: evaluate_island(isl, comb, span, model, p_end), active, model.jobs)
        results.append(SpanResult(s_idx, tuple(contribs), skipped))
    return NliResult(comb.cut_index, tuple(results))
