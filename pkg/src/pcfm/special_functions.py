"""Scalar special functions: Si, Ci, sine moments, the Si(t)/t primitive and
the single-variable integral ``I_{p,q}(L; lam)`` the island closed form reduces to.

All length-dependent functions are evaluated on the unit interval with the
argument ``X = lam * L`` and rescaled, since

    S_k(L; lam)      = L**(k+1)  * S_k(1; lam*L)
    I_{p,q}(L; lam)  = L**(p+q)  * I_{p,q}(1; lam*L)

which keeps magnitudes moderate for spans of ~1e5 m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "SpecialFnConfig",
    "DEFAULT_CONFIG",
    "sine_integral",
    "cosine_integral",
    "sine_moment",
    "si_over_t_primitive",
    "beta_integer",
    "binomial",
    "script_i",
    "UnitSiTable",
]

EULER_GAMMA = 0.57721566490153286061
_EPS = np.finfo(float).eps


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class SpecialFnConfig:
    """Evaluation-strategy knobs.

    ``series_switch_threshold`` is the |lam*L| below which sine moments and
    ``script_i`` use power series instead of the finite alternating sums.
    The sine-moment switch is additionally raised to ``k + 1`` because the
    alternating sum for ``S_k`` grows like ``k!/X**(k+1)`` when ``X < k``.
    ``hypergeometric_switch`` bounds the 2F3 series for ``J(X)``;
    ``asymptotic_switch`` is where the large-X expansion of ``J`` takes over.
    """

    series_switch_threshold: float = 0.1
    hypergeometric_switch: float = 12.0
    asymptotic_switch: float = 40.0
    series_term_cap: int = 400
    abs_tolerance: float = 1e-15

    def __post_init__(self):
        if not self.series_switch_threshold > 0:
            raise ValueError("series_switch_threshold must be > 0")
        if self.series_term_cap < 10:
            raise ValueError("series_term_cap must be >= 10")
        if not self.abs_tolerance > 0:
            raise ValueError("abs_tolerance must be > 0")
        if not 0 < self.hypergeometric_switch <= self.asymptotic_switch:
            raise ValueError("need 0 < hypergeometric_switch <= asymptotic_switch")


DEFAULT_CONFIG = SpecialFnConfig()


def _check_finite(x, name="x"):
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")


def sine_integral(x: float) -> float:
    """Si(x) = integral of sin(t)/t from 0 to x."""
    x = float(x)
    _check_finite(x)
    return float(special.sici(x)[0])


def cosine_integral(x: float) -> float:
    """Ci(x) for real x > 0."""
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"Ci is real only for finite x > 0, got {x!r}")
    return float(special.sici(x)[1])


# --- exact combinatorics -------------------------------------------------


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


@lru_cache(maxsize=None)
def binomial(n: int, k: int) -> int:
    return math.comb(n, k)


@lru_cache(maxsize=None)
def _beta_fraction(p: int, q: int) -> Fraction:
    return Fraction(_factorial(p - 1) * _factorial(q), _factorial(p + q))


def beta_integer(p: int, q: int) -> float:
    """B(p, q+1) = (p-1)! q! / (p+q)! for integers p >= 1, q >= 0.

    Evaluated from exact integers, so the only rounding is the final
    conversion to float.
    """
    if p < 1 or q < 0:
        raise DomainError(f"beta_integer needs p >= 1, q >= 0 (got p={p}, q={q})")
    return float(_beta_fraction(p, q))


# --- sine moments S_k(1; X) = int_0^1 s^k sin(X s) ds ---------------------

# sin(X - m*pi/2) for m mod 4, expressed through (sin X, cos X)
_QUARTER_SHIFT = ((1, 0), (0, -1), (-1, 0), (0, 1))


def _unit_sine_moment_closed(k: int, X: float) -> float:
    # finite alternating sum; terms shrink monotonically only when |X| > k
    s, c = math.sin(X), math.cos(X)
    terms = []
    coef = 1.0  # k!/(k-p)!
    inv = 1.0 / X
    xp = inv    # 1/X**(p+1)
    for p in range(k + 1):
        a, b = _QUARTER_SHIFT[(p + 1) % 4]
        terms.append((-1) ** p * coef * xp * (a * s + b * c))
        coef *= k - p
        xp *= inv
    tail = (0.0, 1.0, 0.0, -1.0)[(k + 1) % 4]
    if tail:
        terms.append(tail * float(_factorial(k)) * inv ** (k + 1))
    return math.fsum(terms)


def _unit_sine_moment_series(k: int, X: float, cap: int = 400) -> float:
    # Expansion about s = 1:
    #   int_0^1 s^k e^{jXs} ds = e^{jX} sum_n (-jX)^n / ((k+1)(k+2)...(k+1+n))
    # Term ratios are X/(k+2+n), so for |X| < k+2 there is no growth at all.
    term = complex(1.0 / (k + 1))
    acc = term
    step = -1j * X
    for n in range(1, cap):
        term *= step / (k + 1 + n)
        acc += term
        if abs(term) <= _EPS * 1e-2 * abs(acc) and n > abs(X) - k:
            break
    return (complex(math.cos(X), math.sin(X)) * acc).imag


def _sine_switch_point(k: int, cfg: SpecialFnConfig) -> float:
    return max(cfg.series_switch_threshold, k + 1.0)


def _unit_sine_moment(k: int, X: float, cfg: SpecialFnConfig, method=None) -> float:
    if X == 0.0:
        return 0.0
    if method is None:
        method = "series" if abs(X) < _sine_switch_point(k, cfg) else "closed"
    if method == "series":
        return _unit_sine_moment_series(k, X, cfg.series_term_cap)
    if method == "closed":
        return _unit_sine_moment_closed(k, X)
    raise ValueError(f"unknown method {method!r}")


def sine_moment(k: int, L: float, lam: float, cfg: SpecialFnConfig = DEFAULT_CONFIG,
                method: str | None = None) -> float:
    """S_k(L; lam) = integral of u**k sin(lam u) over [0, L].

    ``method`` forces ``"series"`` or ``"closed"``; by default the series is
    used for ``|lam L| < max(series_switch_threshold, k + 1)``.
    """
    if k < 0:
        raise DomainError("k must be >= 0")
    if not L > 0:
        raise DomainError("L must be > 0")
    _check_finite(lam, "lambda")
    if lam == 0.0:
        return 0.0
    return L ** (k + 1) * _unit_sine_moment(k, lam * L, cfg, method)


# --- J(X) = int_0^X Si(t)/t dt -------------------------------------------


def _pfq_series(a, b, z, cap):
    """Plain power series of the generalized hypergeometric pFq(a; b; z)."""
    term = 1.0
    acc = 1.0
    for n in range(cap):
        num = 1.0
        for ai in a:
            num *= ai + n
        den = float(n + 1)
        for bi in b:
            den *= bi + n
        term *= num / den * z
        acc += term
        if abs(term) <= _EPS * 1e-2 * abs(acc):
            break
    return acc


@lru_cache(maxsize=8)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _si_over_t_quadrature(x0: float, x1: float, panel: float = 2.0, order: int = 20) -> float:
    # composite Gauss-Legendre on a smooth, slowly oscillating integrand
    npan = max(1, math.ceil((x1 - x0) / panel))
    edges = np.linspace(x0, x1, npan + 1)
    t, w = _gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * t[None, :]
    vals = special.sici(nodes)[0] / nodes
    return math.fsum((half[:, None] * w[None, :] * vals).ravel())


def _j_asymptotic(X: float, cap: int) -> float:
    # J(X) = (pi/2)(ln X + gamma) + Im[e^{jX} sum_{k>=1} k! H_k / (jX)^{k+1}],
    # optimally truncated at the smallest term.
    acc = 0.0 + 0.0j
    h = 0.0
    mag = 1.0 / X       # k! / X**(k+1)
    prev = math.inf
    for k in range(1, cap):
        h += 1.0 / k
        mag *= k / X
        size = mag * h
        if size > prev:
            break
        acc += size * (-1j) ** ((k + 1) % 4)
        prev = size
        if size < _EPS * 1e-3:
            break
    tail = (complex(math.cos(X), math.sin(X)) * acc).imag
    return 0.5 * math.pi * (math.log(X) + EULER_GAMMA) + tail


def _j_positive(X: float, cfg: SpecialFnConfig) -> float:
    if X <= cfg.hypergeometric_switch:
        return X * _pfq_series((0.5, 0.5), (1.5, 1.5, 1.5), -0.25 * X * X, cfg.series_term_cap)
    if X < cfg.asymptotic_switch:
        x0 = cfg.hypergeometric_switch
        return _j_positive(x0, cfg) + _si_over_t_quadrature(x0, X)
    return _j_asymptotic(X, cfg.series_term_cap)


def si_over_t_primitive(X: float, cfg: SpecialFnConfig = DEFAULT_CONFIG) -> float:
    """J(X) = integral of Si(t)/t over [0, X] = X 2F3(1/2,1/2; 3/2,3/2,3/2; -X^2/4).

    Odd in X. The hypergeometric series is used up to
    ``cfg.hypergeometric_switch``, composite Gauss-Legendre on Si(t)/t from
    there to ``cfg.asymptotic_switch``, and the asymptotic expansion beyond.
    """
    X = float(X)
    _check_finite(X, "X")
    if X == 0.0:
        return 0.0
    return math.copysign(_j_positive(abs(X), cfg), X)


# --- I_{p,q}(L; lam) = int_0^L u^(p-1) (L-u)^q Si(lam u) du -----------------


class UnitSiTable:
    """Cached Si, J and sine moments at one argument ``X`` on the unit interval.

    ``script_i(p, q)`` returns ``I_{p,q}(1; X)``. The island engine builds one
    table per lambda coefficient and reuses it for every (p, q) pair.
    """

    def __init__(self, X: float, cfg: SpecialFnConfig = DEFAULT_CONFIG):
        _check_finite(X, "X")
        self.X = float(X)
        self.cfg = cfg
        self._si = None
        self._j = None
        self._moments = {}

    @property
    def si(self):
        if self._si is None:
            self._si = float(special.sici(self.X)[0])
        return self._si

    @property
    def j(self):
        if self._j is None:
            self._j = si_over_t_primitive(self.X, self.cfg)
        return self._j

    def moment(self, k: int) -> float:
        if k not in self._moments:
            self._moments[k] = _unit_sine_moment(k, self.X, self.cfg)
        return self._moments[k]

    def script_i(self, p: int, q: int, method: str | None = None) -> float:
        if self.X == 0.0:
            return 0.0
        if method is None:
            method = "series" if abs(self.X) < self.cfg.series_switch_threshold else "closed"
        if method == "series":
            return self._series(p, q)
        if method != "closed":
            raise ValueError(f"unknown method {method!r}")
        if p >= 1:
            terms = [self.si * beta_integer(p, q)]
            for r in range(q + 1):
                terms.append(-(-1) ** r * binomial(q, r) * self.moment(p + r - 1) / (p + r))
            return math.fsum(terms)
        terms = [self.j]
        for r in range(1, q + 1):
            jr = (self.si - self.moment(r - 1)) / r
            terms.append((-1) ** r * binomial(q, r) * jr)
        return math.fsum(terms)

    def _series(self, p: int, q: int) -> float:
        # Si(Xs) = sum_j (-1)^j (Xs)^(2j+1) / ((2j+1)(2j+1)!), integrated
        # termwise against s^(p-1) (1-s)^q -> Beta values.
        X = self.X
        acc = 0.0
        x2 = X * X
        xp = X
        for j in range(self.cfg.series_term_cap):
            n = 2 * j + 1
            term = (-1) ** j * xp / (n * float(_factorial(n))) * beta_integer(p + n, q)
            acc += term
            if abs(term) <= _EPS * 1e-2 * abs(acc):
                break
            xp *= x2
        return acc


def script_i(p: int, q: int, L: float, lam: float, cfg: SpecialFnConfig = DEFAULT_CONFIG,
             method: str | None = None) -> float:
    """I_{p,q}(L; lam) = integral of u**(p-1) (L-u)**q Si(lam u) over [0, L].

    For p >= 1 the Beta-function form with sine moments is used; for p = 0
    the form built on J(lam L). Below ``cfg.series_switch_threshold`` in
    ``|lam L|`` both cases switch to termwise integration of the Si series.
    """
    if p < 0 or q < 0:
        raise DomainError("p and q must be >= 0")
    if not L > 0:
        raise DomainError("L must be > 0")
    _check_finite(lam, "lambda")
    if lam == 0.0:
        return 0.0
    return L ** (p + q) * UnitSiTable(lam * L, cfg).script_i(p, q, method)
