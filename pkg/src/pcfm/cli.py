"""Command-line front end: ``pcfm compute|validate|fit|islands --config link.toml``.

Exit codes: 0 ok, 2 configuration error, 3 oracle did not converge,
4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from .config import ConfigError, LinkConfig, load_config
from .geometry import enumerate_islands
from .islands import _cut_end_power, _map, evaluate_island, island_profile, nli_psd_total
from .oracle import OracleNonConvergence, k_x_quadrature
from .spp import fit_polynomial

log = logging.getLogger("pcfm")

EXIT_OK, EXIT_CONFIG, EXIT_INDETERMINATE, EXIT_FAIL = 0, 2, 3, 4


# --- deterministic serialization -----------------------------------------


def _num(x):
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj) -> str:
    """JSON with floats at 17 significant digits and keys in insertion order."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _num(obj)


def _island_fields(isl):
    return {
        "k_ch": isl.k_ch,
        "m_ch": isl.m_ch,
        "n_ch": isl.n_ch,
        "kind": isl.kind.value if isl.kind else None,
        "status": "skipped" if isl.skipped else ("clipped" if isl.clipped else "full"),
        "rectangle_hz": list(isl.rectangle.as_tuple()),
    }


class _Sink:
    def __init__(self, path):
        self.path = Path(path) if path else None
        self.buf = io.StringIO()

    def line(self, record):
        self.buf.write(dumps(record) + "\n")

    def close(self):
        text = self.buf.getvalue()
        if self.path is None:
            sys.stdout.write(text)
        else:
            self.path.write_text(text)


# --- subcommands ----------------------------------------------------------


def cmd_compute(cfg: LinkConfig, output=None) -> int:
    comb = cfg.comb
    result = nli_psd_total(comb, cfg.spans, cfg.model)
    sink = _Sink(output)
    skipped = [i for i in enumerate_islands(comb, cfg.model.island_mode) if i.skipped]
    for span in result.spans:
        for c in span.contributions:
            rec = {"record": "island", "span": span.span, "cut_index": comb.cut_index}
            rec.update(_island_fields(c.island))
            rec.update({
                "method": "oracle-fallback" if c.fallback else "closed-form",
                "beta2_eff_s2_per_m": c.beta2_eff,
                "n_p": c.spp.degree,
                "fit_max_residual": c.spp.fit_max_residual,
                "k_value": c.k_value,
                "g_nli_w_per_hz": c.g_nli,
            })
            sink.line(rec)
        for isl in skipped:
            rec = {"record": "island", "span": span.span, "cut_index": comb.cut_index}
            rec.update(_island_fields(isl))
            rec.update({"method": None, "k_value": None, "g_nli_w_per_hz": None})
            sink.line(rec)
        sink.line({"record": "span_total", "span": span.span, "cut_index": comb.cut_index,
                   "g_nli_w_per_hz": span.total})
    sink.line({"record": "total", "cut_index": comb.cut_index, "accumulation": "incoherent",
               "spans": len(result.spans), "g_nli_w_per_hz": result.total})
    sink.close()
    if output:
        summary = Path(str(output) + ".summary.csv")
        with open(summary, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cut_index", "span", "accumulation", "g_nli_w_per_hz"])
            for span in result.spans:
                w.writerow([comb.cut_index, span.span, "per-span", _num(span.total)])
            w.writerow([comb.cut_index, "total", "incoherent", _num(result.total)])
    return EXIT_OK


def _validate_island(isl, cfg, span):
    comb, model = cfg.comb, cfg.model
    p_end = _cut_end_power(comb, span)
    contrib = evaluate_island(isl, comb, span, model, p_end)
    spp = contrib.spp
    rec = _island_fields(isl)
    rec.update({"fit_rms_residual": spp.fit_rms_residual, "fit_max_residual": spp.fit_max_residual,
                "closed_k": contrib.k_value})
    source = spp if cfg.oracle_profile_source == "polynomial" else island_profile(isl, comb, span)
    try:
        oracle_k = k_x_quadrature(source, isl.rectangle, contrib.beta2_eff, span.params.span_length,
                                  model.oracle)
    except OracleNonConvergence as exc:
        rec.update({"oracle_k": exc.best_estimate.real, "rel_error": None,
                    "method": "oracle-fallback" if contrib.fallback else "closed-form",
                    "verdict": "INDETERMINATE"})
        return rec
    rel = abs(contrib.k_value - oracle_k) / oracle_k if oracle_k > 0 else abs(contrib.k_value - oracle_k)
    if contrib.fallback:
        verdict = "PASS"
    else:
        verdict = "PASS" if rel <= cfg.validation_tolerance else "FAIL"
    rec.update({"oracle_k": oracle_k, "rel_error": rel,
                "method": "oracle-fallback" if contrib.fallback else "closed-form",
                "tolerance": cfg.validation_tolerance, "verdict": verdict})
    return rec


def cmd_validate(cfg: LinkConfig, output=None) -> int:
    sink = _Sink(output)
    islands = [i for i in enumerate_islands(cfg.comb, cfg.model.island_mode) if not i.skipped]
    verdicts = []
    for s_idx, span in enumerate(cfg.spans):
        recs = _map(lambda isl: _validate_island(isl, cfg, span), islands, cfg.model.jobs)
        for rec in recs:
            verdicts.append(rec["verdict"])
            sink.line({"record": "validation", "span": s_idx, "cut_index": cfg.comb.cut_index, **rec})
    counts = {v: verdicts.count(v) for v in ("PASS", "FAIL", "INDETERMINATE")}
    sink.line({"record": "validation_summary", **counts})
    sink.close()
    if counts["INDETERMINATE"]:
        return EXIT_INDETERMINATE
    return EXIT_FAIL if counts["FAIL"] else EXIT_OK


def _parse_range(text):
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def cmd_fit(cfg: LinkConfig, channel: int, np_values, output=None, span_index: int = 0) -> int:
    comb = cfg.comb
    try:
        comb.channel(channel)
    except KeyError:
        raise ConfigError(f"--channel {channel}: no such channel index")
    if not 0 <= span_index < len(cfg.spans):
        raise ConfigError(f"--span {span_index}: no such span")
    span = cfg.spans[span_index]
    prof = span.profile(comb, channel)   # SCI island profile sqrt(p^3/p) is the channel profile
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["channel", "span", "n_p", "rms_residual", "max_residual", "warning"])
    for n_p in np_values:
        spp = fit_polynomial(prof, span.params.span_length, n_p)
        if spp.warning:
            log.warning("channel %s, N_p=%d: %s", channel, n_p, spp.warning)
        w.writerow([channel, span_index, n_p, _num(spp.fit_rms_residual), _num(spp.fit_max_residual),
                    spp.warning or ""])
    text = out.getvalue()
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_islands(cfg: LinkConfig, output=None) -> int:
    sink = _Sink(output)
    for isl in enumerate_islands(cfg.comb, cfg.model.island_mode):
        sink.line({"record": "island", "cut_index": cfg.comb.cut_index, **_island_fields(isl)})
    sink.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcfm", description="Polynomial closed-form GN model NLI estimator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="link configuration (TOML)")
        p.add_argument("--output", help="output path (default: stdout)")
        p.add_argument("--mode", choices=["skip", "clip"], help="island geometry mode")
        p.add_argument("--np", type=int, dest="n_p", help="polynomial order override")
        p.add_argument("--oracle-tolerance", type=float, help="oracle self-convergence target")
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    common(sub.add_parser("compute", help="per-island K_x and NLI PSD"))
    common(sub.add_parser("validate", help="closed form vs quadrature oracle"))
    fit = common(sub.add_parser("fit", help="fit residual vs polynomial order"))
    fit.add_argument("--channel", type=int, required=True)
    fit.add_argument("--np-range", default="0:10", help="'lo:hi' or comma list")
    fit.add_argument("--span", type=int, default=0)
    common(sub.add_parser("islands", help="list islands"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, n_p=args.n_p, mode=args.mode,
                          oracle_tolerance=args.oracle_tolerance, jobs=args.jobs)
        if args.command == "compute":
            return cmd_compute(cfg, args.output)
        if args.command == "validate":
            return cmd_validate(cfg, args.output)
        if args.command == "fit":
            return cmd_fit(cfg, args.channel, _parse_range(args.np_range), args.output, args.span)
        return cmd_islands(cfg, args.output)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleNonConvergence as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE


if __name__ == "__main__":
    sys.exit(main())
