"""Command-line interface: ``decoyrate {rate,sweep,simulate,decoy-check,maxdist}``.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 statistical
agreement or bracketing failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .channel import build_yield_table
from .config import DARK_COUNT_NOTICE, ConfigError, DeviceConfig
from .decoy import (
    InvalidDecoyConfiguration,
    analytic_measurements,
    bounds_bracket_check,
    estimate_vacuum_weak,
)
from .montecarlo import MAX_PULSES, RNG_ID, compare_to_analytic, simulate_decoy_session, simulate_run
from .rates import VARIANTS
from .sweep import (
    DISTANCE_TOL_KM,
    GRID_POINTS,
    MU_RTOL,
    MU_XTOL,
    BracketError,
    default_lengths,
    distance_sweep,
    evaluate,
    find_max_distance,
    optimize_mu,
)

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_STATS = 0, 1, 2, 3

CSV_HEADER = [
    "length_km",
    "mu_opt_koashi", "G_koashi",
    "mu_opt_gllp", "G_gllp",
    "mu_opt_ideal", "G_ideal",
    "mu_opt_nodecoy", "G_nodecoy",
]

CONVENTIONS = {
    "rate_units": "bits per emitted pulse, sifting factor included",
    "nodecoy": "tagged-fraction stand-in for the prior threshold-detector bound; not the published formula",
    "dark_count": "combined probability of a dark count in either detector",
}

_notice_shown = False


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    """Fixed-point text with 12 significant digits, independent of locale."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0.000000000000"
    decimals = max(0, 11 - math.floor(math.log10(abs(x))))
    return f"{x:.{decimals}f}"


def _load_config(args: argparse.Namespace) -> DeviceConfig:
    global _notice_shown
    if args.config:
        try:
            config = DeviceConfig.load(args.config)
        except OSError as exc:
            raise CLIError(EXIT_IO, f"cannot read config {args.config}: {exc.strerror or exc}") from None
    else:
        config = DeviceConfig()
        if not _notice_shown:
            print(DARK_COUNT_NOTICE, file=sys.stderr)
            _notice_shown = True
    changes = {}
    if getattr(args, "mode", None):
        changes["mode"] = args.mode
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "pulses", None) is not None:
        changes["pulses"] = args.pulses
    if getattr(args, "length_km", None) is not None:
        changes["length_km"] = args.length_km
    if getattr(args, "mu", None) is not None:
        changes["mu"] = args.mu
    return config.with_(**changes) if changes else config


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, newline="")
    except OSError as exc:
        raise CLIError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None


def _json_number(x: float):
    if isinstance(x, float) and math.isinf(x):
        return "unbounded"
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


# -- rate -------------------------------------------------------------------

def cmd_rate(config: DeviceConfig, length_km: float, mu: float) -> str:
    cols = ["variant", "G", "ec_cost", "vacuum_credit", "single_photon_term", "entropy_H",
            "Q", "E", "Q0", "Q1", "e1"]
    rows = []
    for v in VARIANTS:
        inp, br = evaluate(config, v, length_km, mu)
        rows.append([v, br.G, br.ec_cost, br.vacuum_credit, br.single_photon_term, br.entropy_H,
                     inp.Q, inp.E, inp.Q0, inp.Q1, inp.e1])
    out = io.StringIO()
    out.write(f"# length_km={fmt(length_km)} mu={fmt(mu)} mode={config.mode}; {CONVENTIONS['rate_units']}\n")
    out.write(f"# nodecoy: {CONVENTIONS['nodecoy']}\n")
    out.write(" ".join(f"{c:>19}" for c in cols) + "\n")
    for r in rows:
        out.write(f"{r[0]:>19} " + " ".join(f"{x:>19.10e}" for x in r[1:]) + "\n")
    G = {r[0]: r[1] for r in rows}
    out.write(f"# G_koashi - G_gllp = {G['koashi'] - G['gllp']:.12e}  (Q0 = {rows[0][8]:.12e})\n")
    return out.getvalue()


# -- sweep ------------------------------------------------------------------

def sweep_csv(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in result.points:
        row = [fmt(p.length_km)]
        for v in VARIANTS:
            row += [fmt(p.mu_opt[v]), fmt(p.G[v])]
        w.writerow(row)
    return buf.getvalue()


def sweep_metadata(config: DeviceConfig, result, l_min: float, l_max: float, step: float) -> dict:
    return {
        "tool": "decoyrate",
        "version": __version__,
        "config": config.to_dict(),
        "lengths_km": {"min": l_min, "max": l_max, "step": step},
        "optimizer": {
            "method": "log-spaced grid scan, then golden-section search around the best grid point",
            "grid_points": GRID_POINTS,
            "mu_bracket": [config.mu_min, config.mu_max],
            "mu_xtol": MU_XTOL,
            "mu_rtol": MU_RTOL,
            "max_distance": f"bisection to {DISTANCE_TOL_KM} km between the last positive and first non-positive sweep point",
        },
        "G_columns": "raw optimized rates, not clamped at zero",
        "mu_opt_ideal": "fixed at 1 (single-photon source)",
        "conventions": CONVENTIONS,
        "max_distance_km": {v: _json_number(result.max_distance_km[v]) for v in result.variants},
    }


def cmd_sweep(config: DeviceConfig, l_min: float, l_max: float, step: float, out_path: str | None) -> tuple[str, dict]:
    try:
        lengths = default_lengths(l_min, l_max, step)
    except ValueError as exc:
        raise CLIError(EXIT_VALIDATION, str(exc)) from None
    result = distance_sweep(config, lengths)
    text = sweep_csv(result)
    meta = sweep_metadata(config, result, l_min, l_max, step)
    _write_text(out_path, text)
    if out_path and out_path != "-":
        _write_text(str(out_path) + ".meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return text, meta


# -- simulate ---------------------------------------------------------------

def cmd_simulate(config: DeviceConfig, n_pulses: int, seed: int, out_path: str | None,
                 target_e_mis: float | None = None, threshold: float = 4.0) -> tuple[dict, bool]:
    if n_pulses > min(config.max_pulses, MAX_PULSES):
        raise CLIError(EXIT_VALIDATION, f"pulses: {n_pulses} exceeds the cap of {min(config.max_pulses, MAX_PULSES)}")
    src, link, det = config.source(), config.link(), config.detector()
    tally = simulate_run(src, link, det, n_pulses, seed)
    target_link = config.link(e_mis=target_e_mis) if target_e_mis is not None else link
    table = build_yield_table(src, target_link, det)
    dev = compare_to_analytic(tally, table, threshold=threshold)
    report = {
        "tool": "decoyrate",
        "version": __version__,
        "config": config.to_dict(),
        "n_pulses": n_pulses,
        "seed": seed,
        "rng": RNG_ID,
        "tally": tally.to_dict(),
        "analytic": {
            "e_mis": target_link.e_mis,
            "Q": table.Q,
            "E": table.E,
            "Q_n": [table.gain(n) for n in range(4)],
            "e_n": [table.qber(n) for n in range(4)],
        },
        "deviation": dev.to_dict(),
    }
    _write_text(out_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report, dev.passed


# -- decoy-check ------------------------------------------------------------

def _pick_intensities(intensities: Sequence[float]) -> tuple[float, float]:
    if len(intensities) < 3 or 0.0 not in intensities:
        raise InvalidDecoyConfiguration("need at least three intensities including 0")
    if any(x < 0 for x in intensities):
        raise InvalidDecoyConfiguration("intensities must be non-negative")
    positive = sorted(x for x in intensities if x > 0)
    if not positive:
        raise InvalidDecoyConfiguration("need a positive signal intensity")
    mu, nu = positive[-1], positive[0]
    if not nu < mu:
        raise InvalidDecoyConfiguration(f"weak decoy must be below the signal, got nu={nu}, mu={mu}")
    return mu, nu


def cmd_decoy_check(config: DeviceConfig, intensities: Sequence[float] | None, pulses: int, seed: int,
                    analytic: bool = False) -> tuple[str, bool, dict]:
    intensities = list(intensities) if intensities else [config.mu, config.nu, 0.0]
    mu, nu = _pick_intensities(intensities)
    link, det = config.link(), config.detector()
    order = [mu, nu, 0.0]
    if analytic:
        meas = analytic_measurements(order, link, det, config.sift_factor)
        source = "analytic (noise-free)"
    else:
        if pulses > min(config.max_pulses, MAX_PULSES):
            raise CLIError(EXIT_VALIDATION, f"pulses: {pulses} exceeds the cap")
        meas = simulate_decoy_session(order, link, det, pulses, seed, config.sift_factor)
        source = f"Monte Carlo, {pulses} pulses per intensity, seed {seed}, rng {RNG_ID}"
    est = estimate_vacuum_weak(*meas, sift=config.sift_factor)
    truth = build_yield_table(config.source(mu), link, det)
    rep = bounds_bracket_check(est, truth)
    lines = [
        f"# decoy check at length_km={fmt(config.length_km)}, mu={fmt(mu)}, nu={fmt(nu)}; {source}",
        f"#        Y0 = {est.Y0:.6e}  (true {truth.Y[0]:.6e})",
        f"#        Q0 = {est.Q0:.6e}  (true {truth.Q0:.6e})",
        *rep.lines(),
        f"vacuous={est.vacuous} result={'PASS' if rep.passed else 'FAIL'}",
    ]
    payload = {
        "length_km": config.length_km, "mu": mu, "nu": nu, "source": source,
        "estimate": {k: getattr(est, k) for k in ("Y0", "Y1_lower", "Q0", "Q1_lower", "e1_upper", "vacuous")},
        "truth": rep.truth, "slack": rep.slack, "checks": rep.checks, "passed": rep.passed,
    }
    return "\n".join(lines) + "\n", rep.passed, payload


# -- maxdist ----------------------------------------------------------------

def max_distances(config: DeviceConfig, bracket: tuple[float, float] = (0.0, 300.0), coarse_step: float = 10.0) -> dict[str, float]:
    """Per-variant distance limit: coarse scan for the sign change, then bisection.

    ``inf`` means positive over the whole bracket; ``nan`` means never positive.
    """
    lo, hi = bracket
    grid = list(np.arange(lo, hi + 1e-9, coarse_step))
    out = {}
    for v in VARIANTS:
        prev = None
        found = None
        for L in grid:
            if optimize_mu(config, v, float(L)).breakdown.G <= 0:
                found = (prev, float(L))
                break
            prev = float(L)
        if found is None:
            out[v] = math.inf
        elif found[0] is None:
            out[v] = math.nan
        else:
            try:
                out[v] = find_max_distance(config, v, found)
            except BracketError:
                out[v] = found[0]
    return out


def cmd_maxdist(config: DeviceConfig) -> tuple[str, dict[str, float]]:
    dist = max_distances(config)
    lines = [f"# distance limit per variant (km), mode={config.mode}, bisection tolerance {DISTANCE_TOL_KM} km"]
    for v in VARIANTS:
        d = dist[v]
        shown = "unbounded" if math.isinf(d) else ("none" if math.isnan(d) else f"{d:.2f}")
        lines.append(f"{v:>8} {shown:>10}")
    gap = dist["koashi"] - dist["gllp"]
    lines.append(f"koashi - gllp gap: {'n/a' if not math.isfinite(gap) else f'{gap:.2f}'} km")
    return "\n".join(lines) + "\n", dist


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decoyrate", description="Asymptotic key rates for decoy-state BB84 with threshold detectors.",
                                     epilog="exit codes: 0 ok, 1 validation, 2 I/O, 3 statistical failure")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON device configuration (defaults if omitted)")
    common.add_argument("--mode", choices=("oracle", "decoy"), help="source of Q0, Q1, e1")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", parents=[common], help="rate breakdown for all variants at one point")
    p.add_argument("--length-km", type=float)
    p.add_argument("--mu", type=float)

    p = sub.add_parser("sweep", parents=[common], help="optimized rate vs distance, written as CSV")
    p.add_argument("--l-min", type=float, default=0.0)
    p.add_argument("--l-max", type=float, default=180.0)
    p.add_argument("--step", type=float, default=2.0)
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo run compared to the analytic model")
    p.add_argument("--length-km", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--pulses", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--threshold", type=float, default=4.0, help="z-score threshold (default 4)")
    p.add_argument("--target-e-mis", type=float, help="override e_mis in the analytic comparison target only")

    p = sub.add_parser("decoy-check", parents=[common], help="decoy bounds against the true single-photon values")
    p.add_argument("--length-km", type=float)
    p.add_argument("--intensities", help="comma-separated, e.g. 0.5,0.05,0")
    p.add_argument("--pulses", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--analytic", action="store_true", help="use noise-free model measurements")
    p.add_argument("--out", metavar="PATH", help="also write a JSON report")

    sub.add_parser("maxdist", parents=[common], help="distance limit of each variant")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "rate":
            sys.stdout.write(cmd_rate(config, config.length_km, config.mu))
        elif args.command == "sweep":
            text, _ = cmd_sweep(config, args.l_min, args.l_max, args.step, args.out)
        elif args.command == "simulate":
            _, ok = cmd_simulate(config, config.pulses, config.seed, args.out, args.target_e_mis, args.threshold)
            if not ok:
                print("statistical agreement FAILED", file=sys.stderr)
                return EXIT_STATS
        elif args.command == "decoy-check":
            try:
                intensities = [float(x) for x in args.intensities.split(",")] if args.intensities else None
            except ValueError:
                raise CLIError(EXIT_VALIDATION, f"intensities: cannot parse {args.intensities!r}") from None
            text, ok, payload = cmd_decoy_check(config, intensities, config.pulses, config.seed, args.analytic)
            sys.stdout.write(text)
            if args.out:
                _write_text(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
            if not ok:
                return EXIT_STATS
        elif args.command == "maxdist":
            text, _ = cmd_maxdist(config)
            sys.stdout.write(text)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, InvalidDecoyConfiguration, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
