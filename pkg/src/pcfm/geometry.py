"""WDM comb, frequency rectangles and island enumeration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

__all__ = [
    "Channel",
    "WdmComb",
    "FrequencyRectangle",
    "IslandKind",
    "Island",
    "dispersion_scale",
    "frequency_rectangle",
    "lambda_coefficients",
    "enumerate_islands",
]


def dispersion_scale(beta2_eff: float) -> float:
    """4 pi^2 beta2_eff: multiplies f1' f2' (z1 - z2) in the phase (Hz, s^2/m)."""
    return 4.0 * math.pi ** 2 * beta2_eff


@dataclass(frozen=True)
class Channel:
    index: int
    center_frequency: float      # Hz
    bandwidth: float             # Hz
    launch_psd: float = 0.0      # W/Hz
    profile_id: str = "default"

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"channel {self.index}: bandwidth must be > 0")
        if not self.launch_psd >= 0:
            raise ValueError(f"channel {self.index}: launch_psd must be >= 0")

    @property
    def low(self) -> float:
        return self.center_frequency - 0.5 * self.bandwidth

    @property
    def high(self) -> float:
        return self.center_frequency + 0.5 * self.bandwidth


@dataclass(frozen=True)
class WdmComb:
    """Channels sorted by frequency; ``cut_index`` names a ``Channel.index``."""

    channels: tuple
    cut_index: int

    def __post_init__(self):
        chans = tuple(sorted(self.channels, key=lambda c: c.center_frequency))
        object.__setattr__(self, "channels", chans)
        labels = [c.index for c in chans]
        if len(set(labels)) != len(labels):
            raise ValueError("channel indices must be unique")
        if self.cut_index not in labels:
            raise ValueError(f"cut_index {self.cut_index} is not a channel index")
        for lo, hi in zip(chans[:-1], chans[1:]):
            if not hi.center_frequency > lo.center_frequency:
                raise ValueError("channel frequencies must be strictly increasing")
            if hi.low < lo.high:
                raise ValueError(f"channels {lo.index} and {hi.index} overlap in frequency")

    def channel(self, index: int) -> Channel:
        for c in self.channels:
            if c.index == index:
                return c
        raise KeyError(index)

    @property
    def cut(self) -> Channel:
        return self.channel(self.cut_index)

    def with_cut(self, index: int) -> "WdmComb":
        return WdmComb(self.channels, index)


@dataclass(frozen=True)
class FrequencyRectangle:
    """CUT-relative edges (Hz): f2' in [a_k, b_k], f1' in [c_m, d_m]."""

    a_k: float
    b_k: float
    c_m: float
    d_m: float

    def __post_init__(self):
        if self.a_k > self.b_k or self.c_m > self.d_m:
            raise ValueError("rectangle edges must satisfy a_k <= b_k and c_m <= d_m")

    @property
    def width_k(self) -> float:
        return self.b_k - self.a_k

    @property
    def width_m(self) -> float:
        return self.d_m - self.c_m

    @property
    def area(self) -> float:
        return self.width_k * self.width_m

    def transposed(self) -> "FrequencyRectangle":
        return FrequencyRectangle(self.c_m, self.d_m, self.a_k, self.b_k)

    def as_tuple(self):
        return (self.a_k, self.b_k, self.c_m, self.d_m)


def frequency_rectangle(comb: WdmComb, k_ch: int, m_ch: int) -> FrequencyRectangle:
    f_cut = comb.cut.center_frequency
    k = comb.channel(k_ch)
    m = comb.channel(m_ch)
    dk = k.center_frequency - f_cut
    dm = m.center_frequency - f_cut
    return FrequencyRectangle(dk - 0.5 * k.bandwidth, dk + 0.5 * k.bandwidth,
                              dm - 0.5 * m.bandwidth, dm + 0.5 * m.bandwidth)


def lambda_coefficients(rect: FrequencyRectangle, beta2_eff: float):
    """(lam1, lam2, lam3, lam4) = B*(a d, a c, b c, b d) with B = 4 pi^2 beta2_eff."""
    b = dispersion_scale(beta2_eff)
    return (b * rect.a_k * rect.d_m, b * rect.a_k * rect.c_m,
            b * rect.b_k * rect.c_m, b * rect.b_k * rect.d_m)


class IslandKind(str, Enum):
    SCI = "SCI"
    XCI = "XCI"
    MCI = "MCI"


@dataclass(frozen=True)
class Island:
    m_ch: int
    k_ch: int
    n_ch: int | None
    rectangle: FrequencyRectangle
    kind: IslandKind | None
    skipped: bool = False
    clipped: bool = False

    @property
    def key(self):
        return (self.k_ch, self.m_ch, -1 if self.n_ch is None else self.n_ch)


def _classify(m_ch, k_ch, n_ch, cut) -> IslandKind:
    if m_ch == k_ch == n_ch == cut:
        return IslandKind.SCI
    others = [c for c in (m_ch, k_ch) if c != cut]
    if len(others) == 1 and n_ch == others[0]:
        return IslandKind.XCI
    return IslandKind.MCI


def _clip(rect, lo, hi):
    # Shrink both axes equally so every point has f1' + f2' in [lo, hi].
    e_lo = max(0.0, lo - (rect.a_k + rect.c_m))
    e_hi = max(0.0, (rect.b_k + rect.d_m) - hi)
    a, c = rect.a_k + 0.5 * e_lo, rect.c_m + 0.5 * e_lo
    b, d = rect.b_k - 0.5 * e_hi, rect.d_m - 0.5 * e_hi
    if not (a < b and c < d):
        return None
    return FrequencyRectangle(a, b, c, d)


def enumerate_islands(comb: WdmComb, mode: str = "skip") -> list:
    """Islands for every ordered (k_ch, m_ch) pair, in (k_ch, m_ch) frequency order.

    ``skip``: the full rectangle is kept and assigned to the channel whose
    band contains the image f_m + f_k - f_CUT; pairs with no such channel
    are returned with ``skipped=True``. ``clip``: one island per channel whose
    band overlaps the range of f1' + f2', on the largest equally-shrunk
    sub-rectangle lying entirely inside that band.
    """
    if mode not in ("skip", "clip"):
        raise ValueError(f"unknown island mode {mode!r}")
    cut = comb.cut
    f_cut = cut.center_frequency
    rel = [(c, c.low - f_cut, c.high - f_cut) for c in comb.channels]
    out = []
    for k in comb.channels:
        for m in comb.channels:
            rect = frequency_rectangle(comb, k.index, m.index)
            if mode == "skip":
                image = (m.center_frequency - f_cut) + (k.center_frequency - f_cut)
                owner = next((c for c, lo, hi in rel if lo <= image <= hi), None)
                if owner is None:
                    out.append(Island(m.index, k.index, None, rect, None, skipped=True))
                else:
                    out.append(Island(m.index, k.index, owner.index, rect,
                                      _classify(m.index, k.index, owner.index, cut.index)))
                continue
            found = False
            for c, lo, hi in rel:
                sub = _clip(rect, lo, hi)
                if sub is None:
                    continue
                found = True
                out.append(Island(m.index, k.index, c.index, sub,
                                  _classify(m.index, k.index, c.index, cut.index),
                                  clipped=sub != rect))
            if not found:
                out.append(Island(m.index, k.index, None, rect, None, skipped=True))
    return out
