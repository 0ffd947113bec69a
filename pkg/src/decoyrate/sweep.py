"""Mean-photon-number optimization, distance sweeps and distance limits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .channel import build_yield_table, single_photon_channel
from .config import DeviceConfig
from .decoy import InvalidDecoyConfiguration, analytic_measurements, estimate_vacuum_weak
from .mathkernel import poisson_pmf
from .rates import (
    VARIANTS,
    RateBreakdown,
    RateInputs,
    rate_gllp,
    rate_ideal_single_photon,
    rate_koashi,
    rate_no_decoy_baseline,
)

GRID_POINTS = 32
MU_XTOL = 1e-4
MU_RTOL = 1e-4
DISTANCE_TOL_KM = 0.1
# mu reported for the single-photon source, whose rate does not depend on mu
IDEAL_MU = 1.0


class BracketError(ValueError):
    pass


def rate_inputs(config: DeviceConfig, variant: str, length_km: float, mu: float) -> RateInputs:
    """Channel quantities for one rate variant at fixed length and intensity.

    In ``decoy`` mode the GLLP and threshold-detector variants use decoy
    bounds computed from noise-free measurements at ``(mu, config.nu, 0)``;
    otherwise the true vacuum and single-photon contributions are used.
    """
    link = config.link(length_km)
    det = config.detector()
    ec = config.ec()
    if variant == "ideal":
        Q, E = single_photon_channel(link, det, config.sift_factor)
        return RateInputs(Q=Q, E=E, Q0=0.0, Q1=Q, e1=E, f_ec=ec(E))

    table = build_yield_table(config.source(mu), link, det)
    Q, E = table.Q, table.E
    multi = config.sift_factor * (1.0 - poisson_pmf(mu, 0) - poisson_pmf(mu, 1))
    multi_frac = min(1.0, multi / Q) if Q > 0 else 1.0
    Q0, Q1, e1 = table.Q0, table.Q1, table.e1
    if config.mode == "decoy" and variant in ("koashi", "gllp"):
        s, w, v = analytic_measurements([mu, config.nu, 0.0], link, det, config.sift_factor)
        est = estimate_vacuum_weak(s, w, v, config.sift_factor)
        Q0, Q1, e1 = est.Q0, est.Q1_lower, est.e1_upper
    return RateInputs(Q=Q, E=E, Q0=Q0, Q1=Q1, e1=e1, f_ec=ec(E), multi_frac=multi_frac)


def evaluate(config: DeviceConfig, variant: str, length_km: float, mu: float) -> tuple[RateInputs, RateBreakdown]:
    inp = rate_inputs(config, variant, length_km, mu)
    if variant == "koashi":
        return inp, rate_koashi(inp)
    if variant == "gllp":
        return inp, rate_gllp(inp)
    if variant == "ideal":
        return inp, rate_ideal_single_photon(inp.Q, inp.E, inp.f_ec)
    if variant == "nodecoy":
        return inp, rate_no_decoy_baseline(inp)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def golden_section_max(
    f: Callable[[float], float], a: float, b: float, xtol: float = MU_XTOL, rtol: float = MU_RTOL
) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[a, b]``; stops once the bracket is narrower
    than ``min(xtol, rtol * midpoint)``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > min(xtol, rtol * 0.5 * (a + b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


@dataclass(frozen=True)
class MuOptimum:
    mu: float
    breakdown: RateBreakdown
    inputs: RateInputs
    positive: bool


def optimize_mu(
    config: DeviceConfig,
    variant: str,
    length_km: float,
    bracket: tuple[float, float] | None = None,
    grid_points: int = GRID_POINTS,
    xtol: float = MU_XTOL,
) -> MuOptimum:
    """Maximize the rate over the source intensity.

    A log-spaced grid picks the neighbourhood of the best point, then golden
    section refines inside it. The result is never worse than the best grid
    point. When no intensity gives a positive rate, ``positive`` is False and
    the grid optimum is returned.
    """
    lo, hi = bracket if bracket is not None else (config.mu_min, config.mu_max)
    if not 0.0 <= lo < hi:
        raise ValueError(f"need 0 <= mu_lo < mu_hi, got ({lo}, {hi})")
    if variant == "ideal":
        inp, br = evaluate(config, variant, length_km, IDEAL_MU)
        return MuOptimum(IDEAL_MU, br, inp, br.G > 0)
    if config.mode == "decoy" and variant in ("koashi", "gllp"):
        lo = max(lo, config.nu * (1.0 + 1e-9))
        if lo >= hi:
            raise InvalidDecoyConfiguration(f"decoy intensity nu={config.nu} leaves no room below mu_max={hi}")

    def G(mu: float) -> float:
        return evaluate(config, variant, length_km, mu)[1].G

    grid = np.geomspace(max(lo, 1e-12), hi, grid_points)
    values = [G(float(m)) for m in grid]
    i = int(np.argmax(values))
    best_mu, best_G = float(grid[i]), values[i]
    if best_G > 0:
        a = float(grid[max(i - 1, 0)])
        b = float(grid[min(i + 1, grid_points - 1)])
        mu, g = golden_section_max(G, a, b, xtol=xtol)
        if g > best_G:
            best_mu, best_G = mu, g
    inp, br = evaluate(config, variant, length_km, best_mu)
    return MuOptimum(best_mu, br, inp, br.G > 0)


@dataclass
class SweepPoint:
    length_km: float
    mu_opt: dict[str, float]
    G: dict[str, float]
    breakdowns: dict[str, RateBreakdown]

    def G_clamped(self, variant: str) -> float:
        return max(self.G[variant], 0.0)


@dataclass
class CurveResult:
    points: list[SweepPoint]
    max_distance_km: dict[str, float] = field(default_factory=dict)
    variants: tuple[str, ...] = VARIANTS

    @property
    def lengths(self) -> list[float]:
        return [p.length_km for p in self.points]

    def curve(self, variant: str, clamp: bool = True) -> np.ndarray:
        return np.array([p.G_clamped(variant) if clamp else p.G[variant] for p in self.points])


def _optimized_G(config: DeviceConfig, variant: str) -> Callable[[float], float]:
    return lambda L: optimize_mu(config, variant, L).breakdown.G


def find_max_distance(
    config: DeviceConfig,
    variant: str,
    bracket: tuple[float, float],
    tol: float = DISTANCE_TOL_KM,
) -> float:
    """Largest length with a positive optimized rate, by bisection.

    Raises
    ------
    BracketError
        Unless the optimized rate is positive at ``bracket[0]`` and not positive
        at ``bracket[1]``.
    """
    lo, hi = bracket
    G = _optimized_G(config, variant)
    g_lo, g_hi = G(lo), G(hi)
    if not (g_lo > 0 >= g_hi):
        raise BracketError(
            f"{variant}: need G({lo}) > 0 >= G({hi}), got {g_lo:.3e} and {g_hi:.3e}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if G(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def _max_distance_from_grid(config: DeviceConfig, variant: str, lengths: Sequence[float],
                            raw: Sequence[float], refine: bool) -> float:
    positive = [g > 0 for g in raw]
    if not any(positive):
        return math.nan
    if all(positive):
        return math.inf
    last = max(i for i, p in enumerate(positive) if p)
    if last + 1 >= len(lengths):
        return math.inf
    if not refine:
        return float(lengths[last])
    try:
        return find_max_distance(config, variant, (lengths[last], lengths[last + 1]))
    except BracketError:
        return float(lengths[last])


def _sweep_point(args: tuple[DeviceConfig, float, tuple[str, ...]]) -> SweepPoint:
    config, L, variants = args
    mu_opt, G, brs = {}, {}, {}
    for v in variants:
        opt = optimize_mu(config, v, L)
        mu_opt[v], G[v], brs[v] = opt.mu, opt.breakdown.G, opt.breakdown
    return SweepPoint(length_km=float(L), mu_opt=mu_opt, G=G, breakdowns=brs)


def distance_sweep(
    config: DeviceConfig,
    lengths: Iterable[float],
    variants: Sequence[str] = VARIANTS,
    refine: bool = True,
    workers: int = 1,
) -> CurveResult:
    """Optimize every variant independently at each length.

    ``max_distance_km`` is ``inf`` if a variant stays positive over the whole
    sweep and ``nan`` if it is never positive.
    """
    lengths = [float(L) for L in lengths]
    if any(b < a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("lengths must be sorted ascending")
    variants = tuple(variants)
    jobs = [(config, L, variants) for L in lengths]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_point, jobs))
    else:
        points = [_sweep_point(j) for j in jobs]
    result = CurveResult(points=points, variants=variants)
    for v in variants:
        raw = [p.G[v] for p in points]
        result.max_distance_km[v] = _max_distance_from_grid(config, v, lengths, raw, refine)
    return result


def default_lengths(l_min: float = 0.0, l_max: float = 180.0, step: float = 2.0) -> list[float]:
    if step <= 0:
        raise ValueError("step must be positive")
    if l_max < l_min:
        raise ValueError("l_max must be >= l_min")
    n = int(math.floor((l_max - l_min) / step + 1e-9))
    return [round(l_min + i * step, 10) for i in range(n + 1)]
