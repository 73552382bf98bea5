"""TOML link configuration -> comb, spans and model settings.

Keys carry their units (``frequency_hz``, ``span_length_m``,
``beta2_s2_per_m`` ...). dB quantities are converted here and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import tomli

from .geometry import Channel, WdmComb
from .islands import ModelConfig, Span, SpanParams
from .oracle import QuadratureConfig
from .special_functions import SpecialFnConfig
from .spp import NP_MAX, PowerProfile, ProfileError, db_per_km_to_neper_per_m, load_profile_csv

__all__ = ["ConfigError", "LinkConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid link configuration; the message names the offending field."""


@dataclass(frozen=True)
class LinkConfig:
    comb: WdmComb
    spans: tuple
    model: ModelConfig
    oracle_profile_source: str = "exact"
    validation_tolerance: float = 1e-3


def _req(table, key, where, kind=float):
    if key not in table:
        raise ConfigError(f"{where}: missing '{key}'")
    return _as(table[key], key, where, kind)


def _opt(table, key, where, default, kind=float):
    if key not in table:
        return default
    return _as(table[key], key, where, kind)


def _as(value, key, where, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: '{key}' must be a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: '{key}' must be an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"{where}: '{key}' has wrong type {type(value).__name__}")
    return value


def _profile(entry, pid, span_length, base_dir, where):
    where = f"{where}.profiles.{pid}"
    kind = _req(entry, "kind", where, str)
    try:
        if kind in ("analytic-exponential", "exponential"):
            return PowerProfile.exponential(
                db_per_km_to_neper_per_m(_opt(entry, "attenuation_db_per_km", where, 0.0)), span_length)
        if kind in ("exponential-with-lumped-loss", "lumped-loss"):
            return PowerProfile.lumped_loss(
                db_per_km_to_neper_per_m(_opt(entry, "attenuation_db_per_km", where, 0.0)), span_length,
                _req(entry, "loss_position_m", where), _req(entry, "loss_db", where))
        if kind == "linear-db-tilt":
            return PowerProfile.linear_db_tilt(_req(entry, "tilt_db", where), span_length)
        if kind == "flat":
            return PowerProfile.flat(span_length)
        if kind == "tabulated":
            if "csv" in entry:
                path = Path(_as(entry["csv"], "csv", where, str))
                if not path.is_absolute():
                    path = base_dir / path
                return load_profile_csv(path, span_length)
            samples = _req(entry, "samples", where, list)
            return PowerProfile.tabulated([(float(z), float(p)) for z, p in samples], span_length)
    except (ProfileError, OSError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown profile kind {kind!r}")


def _channels(raw):
    comb = raw.get("comb")
    if not isinstance(comb, dict):
        raise ConfigError("missing [comb] table")
    chans = comb.get("channels")
    if not isinstance(chans, list) or not chans:
        raise ConfigError("comb: 'channels' must be a non-empty array of tables")
    out = []
    for pos, ch in enumerate(chans):
        label = ch.get("index", pos)
        where = f"comb.channels[{pos}] (index {label})"
        idx = _as(label, "index", where, int)
        try:
            out.append(Channel(idx, _req(ch, "frequency_hz", where), _req(ch, "bandwidth_hz", where),
                               _opt(ch, "launch_psd_w_per_hz", where, 0.0),
                               _opt(ch, "profile", where, "default", str)))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{where}: {exc}") from exc
    cut = _req(comb, "cut_index", "comb", int)
    try:
        return WdmComb(tuple(out), cut)
    except ValueError as exc:
        raise ConfigError(f"comb: {exc}") from exc


def _spans(raw, comb, base_dir):
    spans = raw.get("spans")
    if not isinstance(spans, list) or not spans:
        raise ConfigError("'spans' must be a non-empty array of tables")
    shared = raw.get("profiles", {})
    out = []
    for s_idx, sp in enumerate(spans):
        where = f"spans[{s_idx}]"
        L = _req(sp, "span_length_m", where)
        overrides = {}
        for o_idx, ov in enumerate(sp.get("beta2_eff_override", [])):
            ow = f"{where}.beta2_eff_override[{o_idx}]"
            overrides[(_req(ov, "m_ch", ow, int), _req(ov, "k_ch", ow, int), _req(ov, "n_ch", ow, int))] = \
                _req(ov, "beta2_s2_per_m", ow)
        try:
            params = SpanParams(L, _req(sp, "beta2_s2_per_m", where), _req(sp, "gamma_per_w_per_m", where),
                                _opt(sp, "big_gamma", where, 1.0), _opt(sp, "cut_end_power", where, None),
                                overrides)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{where}: {exc}") from exc
        specs = dict(shared)
        specs.update(sp.get("profiles", {}))
        needed = {c.profile_id for c in comb.channels}
        missing = sorted(needed - specs.keys())
        if missing:
            users = [c.index for c in comb.channels if c.profile_id in missing]
            raise ConfigError(f"{where}: profile(s) {missing} referenced by channel(s) {users} are not defined")
        profiles = {pid: _profile(specs[pid], pid, L, base_dir, where) for pid in sorted(needed)}
        out.append(Span(params, profiles))
    return tuple(out)


def _model(raw, n_p=None, mode=None, tolerance=None, jobs=None):
    m = raw.get("model", {})
    sf = m.get("special_functions", {})
    try:
        special = SpecialFnConfig(
            series_switch_threshold=_opt(sf, "series_switch_threshold", "model.special_functions", 0.1),
            hypergeometric_switch=_opt(sf, "hypergeometric_switch", "model.special_functions", 12.0),
            asymptotic_switch=_opt(sf, "asymptotic_switch", "model.special_functions", 40.0),
            series_term_cap=_opt(sf, "series_term_cap", "model.special_functions", 400, int),
            abs_tolerance=_opt(sf, "abs_tolerance", "model.special_functions", 1e-15))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model.special_functions: {exc}") from exc
    o = raw.get("oracle", {})
    try:
        oracle = QuadratureConfig(
            freq_nodes_per_axis=_opt(o, "freq_nodes_per_axis", "oracle", 96, int),
            z_moment_method=_opt(o, "z_moment_method", "oracle", "closed-form-recurrence", str),
            rel_tolerance_target=tolerance if tolerance is not None
            else _opt(o, "rel_tolerance_target", "oracle", 1e-6),
            max_subdivisions=_opt(o, "max_subdivisions", "oracle", 4, int))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"oracle: {exc}") from exc
    n_p = n_p if n_p is not None else _opt(m, "n_p", "model", 8, int)
    if not 0 <= n_p <= NP_MAX:
        raise ConfigError(f"model: 'n_p' must lie in [0, {NP_MAX}], got {n_p}")
    mode = mode if mode is not None else _opt(m, "island_mode", "model", "skip", str)
    if mode not in ("skip", "clip"):
        raise ConfigError(f"model: 'island_mode' must be 'skip' or 'clip', got {mode!r}")
    return ModelConfig(n_p=n_p, island_mode=mode,
                       degenerate_threshold=_opt(m, "degenerate_threshold", "model", 1e-40),
                       special=special, oracle=oracle, jobs=jobs or 1)


def parse_config(raw: dict, base_dir=".", n_p=None, mode=None, oracle_tolerance=None,
                 jobs=None) -> LinkConfig:
    """Build a :class:`LinkConfig` from an already-parsed TOML mapping."""
    base_dir = Path(base_dir)
    comb = _channels(raw)
    spans = _spans(raw, comb, base_dir)
    model = _model(raw, n_p, mode, oracle_tolerance, jobs)
    src = _opt(raw.get("oracle", {}), "profile_source", "oracle", "exact", str)
    if src not in ("exact", "polynomial"):
        raise ConfigError(f"oracle: 'profile_source' must be 'exact' or 'polynomial', got {src!r}")
    tol = _opt(raw.get("validate", {}), "tolerance", "validate", 1e-3)
    return LinkConfig(comb, spans, model, src, tol)


def load_config(path, **overrides) -> LinkConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, path.parent, **overrides)
