"""Brute-force numerical evaluation of the island core integral.

Nothing here touches the sine-moment / Si-primitive machinery of
:mod:`pcfm.special_functions`; the only ingredients are complex z-moments
and tensor Gauss-Legendre quadrature over the frequency rectangle, so the
oracle is an independent check on the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import FrequencyRectangle, dispersion_scale
from .spp import PolynomialSpp

__all__ = [
    "QuadratureConfig",
    "OracleNonConvergence",
    "OracleConsistencyError",
    "z_moment",
    "z_moments",
    "k_x_quadrature",
    "i_nm_quadrature",
    "f_kernel_quadrature",
]


@dataclass(frozen=True)
class QuadratureConfig:
    freq_nodes_per_axis: int = 96
    z_moment_method: str = "closed-form-recurrence"
    rel_tolerance_target: float = 1e-6
    max_subdivisions: int = 4
    nodes_per_period: float = 3.0
    chunk_size: int = 250_000

    def __post_init__(self):
        if self.freq_nodes_per_axis < 8:
            raise ValueError("freq_nodes_per_axis must be >= 8")
        if not self.rel_tolerance_target > 0:
            raise ValueError("rel_tolerance_target must be > 0")
        if self.z_moment_method not in ("closed-form-recurrence", "adaptive"):
            raise ValueError(f"unknown z_moment_method {self.z_moment_method!r}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


class OracleNonConvergence(RuntimeError):
    def __init__(self, message, best_estimate, achieved_tolerance):
        super().__init__(f"{message} (best={best_estimate!r}, achieved rel. change={achieved_tolerance:.3g})")
        self.best_estimate = best_estimate
        self.achieved_tolerance = achieved_tolerance


class OracleConsistencyError(RuntimeError):
    """A quantity that must be real came out complex."""


# --- z-moments ------------------------------------------------------------

_MILLER_EXTRA = 64


def _unit_moments(nmax: int, X: np.ndarray) -> np.ndarray:
    """m_n(X) = int_0^1 s^n e^{jXs} ds for n = 0..nmax; shape X.shape + (nmax+1,).

    Upward recurrence m_n = (e^{jX} - n m_{n-1})/(jX) is used where
    |X| >= max(n, 1); elsewhere a downward (Miller) recurrence
    m_{n-1} = (e^{jX} - jX m_n)/n seeded far above nmax.
    """
    X = np.asarray(X, dtype=float)
    flat = X.ravel()
    eix = np.exp(1j * flat)
    out = np.empty((flat.size, nmax + 1), dtype=complex)

    ax = np.abs(flat)
    big = ax >= 1.0
    if np.any(big):
        xb = flat[big]
        eb = eix[big]
        jx = 1j * xb
        # e^{jX} - 1 without cancellation at moderate X
        m = (-2.0 * np.sin(0.5 * xb) ** 2 + 1j * np.sin(xb)) / jx
        col = np.empty((xb.size, nmax + 1), dtype=complex)
        col[:, 0] = m
        for n in range(1, nmax + 1):
            m = (eb - n * m) / jx
            col[:, n] = m
        out[big] = col

    small = ax < max(nmax, 1)
    if np.any(small):
        xs = flat[small]
        es = eix[small]
        jx = 1j * xs
        top = nmax + _MILLER_EXTRA
        m = es / (top + 1)
        col = np.empty((xs.size, nmax + 1), dtype=complex)
        for n in range(top, 0, -1):
            m = (es - jx * m) / n
            if n - 1 <= nmax:
                col[:, n - 1] = m
        use_down = np.abs(xs)[:, None] < np.maximum(np.arange(nmax + 1), 1)[None, :]
        out[small] = np.where(use_down, col, out[small])
    return out.reshape(X.shape + (nmax + 1,))


def z_moments(nmax: int, L: float, theta) -> np.ndarray:
    """M_n(theta) = int_0^L z^n e^{j theta z} dz for n = 0..nmax (trailing axis)."""
    theta = np.asarray(theta, dtype=float)
    m = _unit_moments(nmax, theta * L)
    scale = L ** (np.arange(nmax + 1) + 1.0)
    return m * scale


def z_moment(n: int, L: float, theta: float) -> complex:
    return complex(z_moments(n, L, np.array([theta]))[0, n])


# --- frequency quadrature -------------------------------------------------


@lru_cache(maxsize=64)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def _axis_nodes(lo: float, hi: float, n: int):
    t, w = _gl(n)
    half = 0.5 * (hi - lo)
    return 0.5 * (hi + lo) + half * t, half * w


def _nodes_for(phase_span: float, cfg: QuadratureConfig, base: int) -> int:
    # phase_span: total phase swept along one axis (rad)
    need = math.ceil(cfg.nodes_per_period * phase_span / (2.0 * math.pi))
    return max(base, need)


def _axis_counts(rect: FrequencyRectangle, scale: float, cfg: QuadratureConfig):
    # scale multiplies f1*f2 into the phase that drives oscillation along each axis
    f1max = max(abs(rect.c_m), abs(rect.d_m))
    f2max = max(abs(rect.a_k), abs(rect.b_k))
    n1 = _nodes_for(abs(scale) * f2max * rect.width_m, cfg, cfg.freq_nodes_per_axis)
    n2 = _nodes_for(abs(scale) * f1max * rect.width_k, cfg, cfg.freq_nodes_per_axis)
    return n1, n2


def _tensor_integrate(rect, n1, n2, integrand, cfg):
    """Sum w1*w2*integrand(f1, f2) over a tensor grid, chunked along f2."""
    f1, w1 = _axis_nodes(rect.c_m, rect.d_m, n1)
    f2, w2 = _axis_nodes(rect.a_k, rect.b_k, n2)
    rows = max(1, cfg.chunk_size // n1)
    partial = []
    for start in range(0, n2, rows):
        f2c = f2[start:start + rows]
        vals = integrand(f1[None, :], f2c[:, None])
        partial.append(np.sum((vals * w1[None, :]).sum(axis=1) * w2[start:start + rows]))
    return np.sum(np.array(partial))


def _converge(rect, scale, cfg, integrand, what):
    n1, n2 = _axis_counts(rect, scale, cfg)
    prev = _tensor_integrate(rect, n1, n2, integrand, cfg)
    change = math.inf
    for _ in range(cfg.max_subdivisions):
        n1, n2 = 2 * n1, 2 * n2
        cur = _tensor_integrate(rect, n1, n2, integrand, cfg)
        ref = abs(cur)
        change = abs(cur - prev) / ref if ref > 0 else abs(cur - prev)
        if change <= cfg.rel_tolerance_target:
            return cur
        prev = cur
    raise OracleNonConvergence(f"{what} did not converge", complex(prev), change)


# --- z-transform of a raw profile -----------------------------------------

_Z_ORDER = 16
_THETA_ORDER = 17


def _segments(L, breakpoints):
    edges = [0.0] + sorted(b for b in breakpoints if 0.0 < b < L) + [L]
    return list(zip(edges[:-1], edges[1:]))


def _profile_transform(profile, L, breakpoints, theta_max, refine, theta, cfg):
    """g(theta) by composite Gauss-Legendre in z, one period per 16-point panel.

    Within a segment the panels are uniform, so e^{j theta z} factors into a
    per-node phase (16 columns) times powers of e^{j theta h}; the panel sum
    is then a Horner pass instead of a dense exponential matrix.
    """
    theta = np.asarray(theta, dtype=float)
    t, w = _gl(_Z_ORDER)
    out = np.zeros(theta.size, dtype=complex)
    for lo, hi in _segments(L, breakpoints):
        npan = max(2, math.ceil(theta_max * (hi - lo) / (2.0 * math.pi))) * refine
        h = (hi - lo) / npan
        s = 0.5 * h * (t + 1.0)
        z = lo + h * np.arange(npan)[:, None] + s[None, :]
        wp = 0.5 * h * w[None, :] * np.asarray(profile(z.ravel()), dtype=float).reshape(z.shape)
        rows = max(1, cfg.chunk_size // npan)
        for st in range(0, theta.size, rows):
            th = theta[st:st + rows]
            a = np.exp(1j * np.outer(th, s)) @ wp.T
            r = np.exp(1j * th * h)
            acc = a[:, -1].copy()
            for P in range(npan - 2, -1, -1):
                acc *= r
                acc += a[:, P]
            out[st:st + rows] += np.exp(1j * th * lo) * acc
    return out


class _TransformInterpolant:
    """Piecewise Chebyshev interpolant of g(theta) = int_0^L p(z) e^{j theta z} dz.

    g is entire with z-support [0, L], so over a theta panel of width
    pi/L it varies by at most half a period; 17 Chebyshev points per
    panel then interpolate it to near machine precision.
    """

    def __init__(self, profile, L, breakpoints, theta_lo, theta_hi, cfg):
        theta_max = max(abs(theta_lo), abs(theta_hi))
        width = math.pi / L
        npan = max(1, math.ceil((theta_hi - theta_lo) / width))
        self.edges = np.linspace(theta_lo, theta_hi, npan + 1)
        k = np.arange(_THETA_ORDER)
        self.x = np.cos(np.pi * k / (_THETA_ORDER - 1))  # Chebyshev points of 2nd kind
        bw = (-1.0) ** k
        bw[0] *= 0.5
        bw[-1] *= 0.5
        self.bw = bw
        half = 0.5 * np.diff(self.edges)
        mid = 0.5 * (self.edges[1:] + self.edges[:-1])
        samples = (mid[:, None] + half[:, None] * self.x[None, :]).ravel()

        refine = 1
        vals = _profile_transform(profile, L, breakpoints, theta_max, refine, samples, cfg)
        while True:
            refine *= 2
            finer = _profile_transform(profile, L, breakpoints, theta_max, refine, samples, cfg)
            err = np.max(np.abs(finer - vals)) / max(np.max(np.abs(finer)), 1e-300)
            vals = finer
            if err < 1e-13 or refine >= 64:
                break
        self.values = vals.reshape(npan, _THETA_ORDER)
        self.mid, self.half = mid, half

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        flat = theta.ravel()
        idx = np.clip(np.searchsorted(self.edges, flat, side="right") - 1, 0, len(self.mid) - 1)
        s = (flat - self.mid[idx]) / np.where(self.half[idx] > 0, self.half[idx], 1.0)
        diff = s[:, None] - self.x[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15, rtol=0.0)
        diff = np.where(exact, 1.0, diff)
        wts = self.bw[None, :] / diff
        vals = self.values[idx]
        res = (wts * vals).sum(axis=1) / wts.sum(axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            res[hit] = vals[hit][exact[hit]]
        return res.reshape(theta.shape)


# --- public oracles -------------------------------------------------------


def _transform_over(fn, rect, bfrak, L, cfg):
    corners = [bfrak * x * y for x in (rect.c_m, rect.d_m) for y in (rect.a_k, rect.b_k)]
    lo, hi = min(corners), max(corners)
    if lo == hi:
        lo, hi = -1.0 / L, 1.0 / L
    return _TransformInterpolant(fn, L, getattr(fn, "breakpoints", ()), lo, hi, cfg)


def k_x_quadrature(profile, rect: FrequencyRectangle, beta2_eff: float, L: float,
                   cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """Brute-force K_x: 2D quadrature of |int_0^L p(z) e^{j theta z} dz|^2.

    ``profile`` is either a :class:`PolynomialSpp` (z-integral from exact
    polynomial moments, unless ``cfg.z_moment_method == "adaptive"``) or any
    callable on [0, L] (z-integral by refined composite Gauss-Legendre,
    interpolated in theta).
    """
    bfrak = dispersion_scale(beta2_eff)
    if rect.width_k == 0.0 or rect.width_m == 0.0:
        return 0.0

    if isinstance(profile, PolynomialSpp):
        if not math.isclose(profile.span_length, L, rel_tol=1e-12):
            raise ValueError("polynomial span_length does not match L")
    if isinstance(profile, PolynomialSpp) and cfg.z_moment_method == "closed-form-recurrence":
        c = profile.normalized_coefficients
        nmax = c.size - 1

        def integrand(f1, f2):
            m = _unit_moments(nmax, bfrak * f1 * f2 * L)
            return np.abs(m @ c) ** 2 * L * L
    else:
        g = _transform_over(profile, rect, bfrak, L, cfg)

        def integrand(f1, f2):
            return np.abs(g(bfrak * f1 * f2)) ** 2

    val = _converge(rect, bfrak * L, cfg, integrand, "k_x_quadrature")
    return float(np.real(val))


def i_nm_quadrature(n: int, m: int, rect: FrequencyRectangle, beta2_eff: float, L: float,
                    cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """I_nm = int int_rect [M_n M_m* + M_m M_n*] df1 df2 with theta = 4 pi^2 beta2 f1 f2."""
    bfrak = dispersion_scale(beta2_eff)
    if cfg.z_moment_method == "adaptive":
        gn = _transform_over(lambda z: z ** n, rect, bfrak, L, cfg)
        gm = gn if m == n else _transform_over(lambda z: z ** m, rect, bfrak, L, cfg)

        def moments(theta):
            return gn(theta), gm(theta)
    else:
        top = max(n, m)

        def moments(theta):
            mom = z_moments(top, L, theta)
            return mom[..., n], mom[..., m]

    def integrand(f1, f2):
        a, b = moments(bfrak * f1 * f2)
        return a * np.conj(b) + b * np.conj(a)

    val = _converge(rect, bfrak * L, cfg, integrand, "i_nm_quadrature")
    if abs(val.imag) > 1e-10 * max(abs(val), 1e-300):
        raise OracleConsistencyError(f"I_{n}{m} has imaginary residual {val.imag!r}")
    return float(val.real)


def f_kernel_quadrature(u: float, rect: FrequencyRectangle, beta2_eff: float,
                        cfg: QuadratureConfig = QuadratureConfig()) -> complex:
    """F(u) = int int_rect e^{j 4 pi^2 beta2 f1 f2 u} df1 df2 (complex)."""
    bfrak = dispersion_scale(beta2_eff)
    if rect.width_k == 0.0 or rect.width_m == 0.0:
        return 0j
    if bfrak * u == 0.0:
        return complex(rect.width_k * rect.width_m)
    k = bfrak * u

    def integrand(f1, f2):
        return np.exp(1j * k * f1 * f2)

    return complex(_converge(rect, k, cfg, integrand, "f_kernel_quadrature"))
