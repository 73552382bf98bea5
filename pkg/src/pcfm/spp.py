"""Spatial power profiles, island-profile composition and polynomial fitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.interpolate import PchipInterpolator

__all__ = [
    "ProfileError",
    "PowerProfile",
    "IslandProfile",
    "PolynomialSpp",
    "evaluate_profile",
    "compose_island_profile",
    "fit_polynomial",
    "evaluate_polynomial",
    "load_profile_csv",
    "db_per_km_to_neper_per_m",
    "NP_MAX",
]

NP_MAX = 12

KINDS = ("analytic-exponential", "exponential-with-lumped-loss", "linear-db-tilt", "tabulated")


class ProfileError(ValueError):
    """Invalid or singular power profile."""


def db_per_km_to_neper_per_m(alpha_db_per_km: float) -> float:
    """Power attenuation in dB/km to the linear coefficient in 1/m."""
    return alpha_db_per_km * math.log(10.0) / 10.0 / 1e3


@dataclass(frozen=True)
class PowerProfile:
    """Normalized power p(z) of one channel along a span of length ``span_length`` (m).

    Build with the classmethod constructors; the raw fields are
    kind-specific. All parameters are linear SI quantities: dB inputs are
    converted by the constructors.
    """

    kind: str
    span_length: float
    alpha: float = 0.0              # 1/m, exponential and lumped-loss kinds
    loss_position: float = 0.0      # m
    loss_factor: float = 1.0        # linear power factor applied past loss_position
    log_slope: float = 0.0          # 1/m, linear-db-tilt kind: p = exp(log_slope z)
    samples: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProfileError(f"unknown profile kind {self.kind!r}")
        if not self.span_length > 0:
            raise ProfileError("span_length must be > 0")
        if self.kind == "exponential-with-lumped-loss":
            if not 0 <= self.loss_position <= self.span_length:
                raise ProfileError("loss_position outside [0, span_length]")
            if not self.loss_factor > 0:
                raise ProfileError("lumped loss factor must be > 0")
        if self.kind == "tabulated":
            z = np.array([s[0] for s in self.samples], dtype=float)
            p = np.array([s[1] for s in self.samples], dtype=float)
            if z.size < 2:
                raise ProfileError("tabulated profile needs at least two samples")
            if np.any(np.diff(z) <= 0):
                raise ProfileError("tabulated samples must be strictly increasing in z")
            tol = 1e-9 * self.span_length
            if z[0] > tol or z[-1] < self.span_length - tol:
                raise ProfileError("tabulated samples must cover [0, span_length]")
            if np.any(p <= 0):
                raise ProfileError("tabulated profile power must be > 0")
            object.__setattr__(self, "_interp", PchipInterpolator(z, p, extrapolate=True))

    @classmethod
    def exponential(cls, alpha: float, span_length: float) -> "PowerProfile":
        return cls("analytic-exponential", span_length, alpha=alpha)

    @classmethod
    def exponential_db(cls, alpha_db_per_km: float, span_length: float) -> "PowerProfile":
        return cls.exponential(db_per_km_to_neper_per_m(alpha_db_per_km), span_length)

    @classmethod
    def lumped_loss(cls, alpha: float, span_length: float, position: float,
                    loss_db: float) -> "PowerProfile":
        return cls("exponential-with-lumped-loss", span_length, alpha=alpha, loss_position=position,
                   loss_factor=10.0 ** (-loss_db / 10.0))

    @classmethod
    def linear_db_tilt(cls, tilt_db: float, span_length: float) -> "PowerProfile":
        """Power whose dB value changes linearly by ``tilt_db`` over the span."""
        return cls("linear-db-tilt", span_length,
                   log_slope=tilt_db * math.log(10.0) / 10.0 / span_length)

    @classmethod
    def flat(cls, span_length: float) -> "PowerProfile":
        return cls.exponential(0.0, span_length)

    @classmethod
    def tabulated(cls, samples: Sequence[tuple[float, float]], span_length: float) -> "PowerProfile":
        return cls("tabulated", span_length, samples=tuple((float(z), float(p)) for z, p in samples))

    @property
    def breakpoints(self) -> tuple:
        if self.kind == "exponential-with-lumped-loss" and 0 < self.loss_position < self.span_length:
            return (self.loss_position,)
        return ()

    def _eval(self, z):
        if self.kind == "analytic-exponential":
            return np.exp(-self.alpha * z)
        if self.kind == "exponential-with-lumped-loss":
            return np.exp(-self.alpha * z) * np.where(z > self.loss_position, self.loss_factor, 1.0)
        if self.kind == "linear-db-tilt":
            return np.exp(self.log_slope * z)
        return self._interp(z)

    def __call__(self, z):
        return evaluate_profile(self, z)


def evaluate_profile(profile: PowerProfile, z):
    """p(z), for scalar or array z within [0, span_length]."""
    za = np.asarray(z, dtype=float)
    slack = 1e-12 * profile.span_length
    if np.any(za < -slack) or np.any(za > profile.span_length + slack):
        raise ProfileError(f"z outside [0, {profile.span_length}]")
    out = profile._eval(np.clip(za, 0.0, profile.span_length))
    return float(out) if np.ndim(out) == 0 else out


def load_profile_csv(path, span_length: float | None = None) -> PowerProfile:
    """Tabulated profile from a two-column CSV ``z_meters, normalized_power``.

    A non-numeric first row is treated as a header. ``span_length``
    defaults to the last z sample.
    """
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 0 and not rows:
                    continue
                raise ProfileError(f"{path}: bad row {i + 1}: {row!r}")
    if not rows:
        raise ProfileError(f"{path}: no samples")
    return PowerProfile.tabulated(rows, span_length if span_length is not None else rows[-1][0])


class IslandProfile:
    """z -> sqrt(p_m(z) p_k(z) p_n(z) / p_cut(z))."""

    def __init__(self, p_m, p_k, p_n, p_cut):
        parts = (p_m, p_k, p_n, p_cut)
        lengths = {p.span_length for p in parts}
        if len(lengths) != 1:
            raise ProfileError("island profiles must share one span length")
        self.parts = parts
        self.span_length = lengths.pop()
        self.breakpoints = tuple(sorted({b for p in parts for b in p.breakpoints}))

    def __call__(self, z):
        p_m, p_k, p_n, p_cut = (np.asarray(p(z), dtype=float) for p in self.parts)
        if np.any(p_cut <= 0):
            raise ProfileError("CUT profile vanishes; island profile is singular")
        out = np.sqrt(p_m * p_k * p_n / p_cut)
        return float(out) if out.ndim == 0 else out


def compose_island_profile(p_m: PowerProfile, p_k: PowerProfile, p_n: PowerProfile,
                           p_cut: PowerProfile) -> IslandProfile:
    return IslandProfile(p_m, p_k, p_n, p_cut)


@dataclass(frozen=True)
class PolynomialSpp:
    """Monomial coefficients p_n (units m**-n) of a fitted profile on [0, span_length]."""

    coefficients: tuple
    span_length: float
    fit_rms_residual: float = 0.0
    fit_max_residual: float = 0.0
    warning: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.coefficients:
            raise ProfileError("polynomial needs at least one coefficient")
        if self.degree > NP_MAX:
            raise ProfileError(f"degree {self.degree} exceeds N_p max {NP_MAX}")
        if not self.coefficients[0] > 0:
            raise ProfileError("polynomial profile must be positive at z = 0")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def normalized_coefficients(self) -> np.ndarray:
        """Coefficients c_n of the same polynomial in z/L."""
        n = np.arange(self.degree + 1)
        return np.asarray(self.coefficients) * self.span_length ** n

    @classmethod
    def from_normalized(cls, c, span_length, **kw) -> "PolynomialSpp":
        c = np.asarray(c, dtype=float)
        return cls(tuple(c / span_length ** np.arange(c.size)), span_length, **kw)

    def __call__(self, z):
        return evaluate_polynomial(self, z)


def evaluate_polynomial(spp: PolynomialSpp, z):
    """Horner evaluation of sum p_n z**n (normalized internally to z/L)."""
    s = np.asarray(z, dtype=float) / spp.span_length
    c = spp.normalized_coefficients
    acc = np.full_like(s, c[-1])
    for cn in c[-2::-1]:
        acc = acc * s + cn
    return float(acc) if acc.ndim == 0 else acc


def fit_polynomial(profile: Callable, span_length: float, n_p: int, nodes: int | None = None,
                   verify_points: int = 1000, warn_ratio: float = 1e-3) -> PolynomialSpp:
    """Least-squares fit of ``profile`` by a degree-``n_p`` polynomial.

    The fit runs in the Chebyshev basis on z/L sampled at Chebyshev nodes
    (``4 (n_p + 1)`` by default) and is converted exactly to monomials in
    z/L, then rescaled to physical z. Residuals are measured on a uniform
    grid; a max residual above ``warn_ratio`` of the profile peak is
    reported in ``warning`` rather than raised.
    """
    if not 0 <= n_p <= NP_MAX:
        raise ProfileError(f"N_p must lie in [0, {NP_MAX}]")
    nodes = 4 * (n_p + 1) if nodes is None else nodes
    if nodes < n_p + 1:
        raise ProfileError("need at least N_p + 1 fit nodes")
    k = np.arange(nodes)
    s = 0.5 * (1.0 - np.cos((2 * k + 1) * np.pi / (2 * nodes)))
    y = np.asarray(profile(s * span_length), dtype=float)
    cheb = Chebyshev.fit(s, y, n_p, domain=[0.0, 1.0])
    c = cheb.convert(kind=Polynomial, domain=[-1.0, 1.0], window=[-1.0, 1.0]).coef
    c = np.pad(c, (0, n_p + 1 - c.size))

    sv = np.linspace(0.0, 1.0, verify_points)
    truth = np.asarray(profile(sv * span_length), dtype=float)
    fitted = np.polynomial.polynomial.polyval(sv, c)
    resid = fitted - truth
    rms = float(np.sqrt(np.mean(resid ** 2)))
    mx = float(np.max(np.abs(resid)))
    peak = float(np.max(np.abs(truth)))
    warning = None
    if mx > warn_ratio * peak:
        warning = f"max fit residual {mx:.3g} exceeds {warn_ratio:g} of profile peak {peak:.3g}"
    return PolynomialSpp.from_normalized(c, span_length, fit_rms_residual=rms,
                                         fit_max_residual=mx, warning=warning)
