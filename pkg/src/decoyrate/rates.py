"""Asymptotic key-rate formulas with term-by-term breakdowns.

All rates are in bits per emitted pulse. Negative values mean no secure key
and are returned unclamped so that callers can root-find the distance limit.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

from .mathkernel import binary_entropy

VARIANTS = ("koashi", "gllp", "ideal", "nodecoy")


@dataclass(frozen=True)
class RateInputs:
    """Observed and estimated channel quantities feeding a rate formula.

    Attributes
    ----------
    Q : sifted gain per pulse
    E : overall QBER
    Q0 : vacuum contribution to the gain
    Q1 : single-photon contribution to the gain
    e1 : single-photon QBER
    f_ec : error-correction inefficiency, >= 1
    multi_frac : fraction of detected events that may be multiphoton; only the
        no-decoy baseline reads it
    """

    Q: float
    E: float
    Q0: float = 0.0
    Q1: float = 0.0
    e1: float = 0.0
    f_ec: float = 1.22
    multi_frac: float = 0.0

    def __post_init__(self) -> None:
        if self.Q < 0 or self.Q0 < 0 or self.Q1 < 0:
            raise ValueError("gains must be non-negative")
        if self.Q0 + self.Q1 > self.Q * (1 + 1e-12):
            raise ValueError(f"Q0 + Q1 = {self.Q0 + self.Q1!r} exceeds Q = {self.Q!r}")
        for name in ("E", "e1", "multi_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not self.f_ec >= 1.0:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec!r}")


@dataclass(frozen=True)
class RateBreakdown:
    G: float
    ec_cost: float
    vacuum_credit: float
    single_photon_term: float
    entropy_H: float


def _fraction(x: float, Q: float) -> float:
    return x / Q if Q > 0 else 0.0


def rate_koashi(inp: RateInputs) -> RateBreakdown:
    """Threshold-detector rate: GLLP plus an untagged vacuum credit ``Q0``.

    ``entropy_H`` is the privacy-amplification cost per sifted bit,
    ``1 - Q0/Q - (Q1/Q)(1 - h(e1))``, so that ``G = Q(1 - H - f h(E))``.
    """
    ec = inp.Q * inp.f_ec * binary_entropy(inp.E)
    sp = inp.Q1 * (1.0 - binary_entropy(inp.e1))
    H = 1.0 - _fraction(inp.Q0, inp.Q) - _fraction(sp, inp.Q)
    return RateBreakdown(
        G=(-ec + sp) + inp.Q0,
        ec_cost=ec,
        vacuum_credit=inp.Q0,
        single_photon_term=sp,
        entropy_H=H,
    )


def rate_gllp(inp: RateInputs) -> RateBreakdown:
    ec = inp.Q * inp.f_ec * binary_entropy(inp.E)
    sp = inp.Q1 * (1.0 - binary_entropy(inp.e1))
    H = 1.0 - _fraction(sp, inp.Q)
    return RateBreakdown(
        G=-ec + sp,
        ec_cost=ec,
        vacuum_credit=0.0,
        single_photon_term=sp,
        entropy_H=H,
    )


def rate_ideal_single_photon(Q: float, E: float, f_ec: float) -> RateBreakdown:
    """Rate for a source that always emits exactly one photon: ``Q(1 - f h(E) - h(E))``."""
    hE = binary_entropy(E)
    ec = Q * f_ec * hE
    sp = Q * (1.0 - hE)
    return RateBreakdown(G=-ec + sp, ec_cost=ec, vacuum_credit=0.0, single_photon_term=sp, entropy_H=hE)


def rate_no_decoy_baseline(inp: RateInputs) -> RateBreakdown:
    """Tagged-fraction bound without decoy states.

    Every possibly-multiphoton detection (fraction ``multi_frac``) is assumed
    insecure, and all errors are charged to the remaining events. No positive
    term is claimed when ``multi_frac == 1`` or the charged error rate reaches 1/2.
    """
    ec = inp.Q * inp.f_ec * binary_entropy(inp.E)
    untagged = 1.0 - inp.multi_frac
    sp = 0.0
    if untagged > 0 and inp.E / untagged < 0.5:
        sp = inp.Q * untagged * (1.0 - binary_entropy(inp.E / untagged))
    H = 1.0 - _fraction(sp, inp.Q)
    return RateBreakdown(
        G=-ec + sp,
        ec_cost=ec,
        vacuum_credit=0.0,
        single_photon_term=sp,
        entropy_H=H,
    )


class ECInefficiency:
    """Error-correction inefficiency ``f(E)``: a constant, or a step table of
    ``(E, f)`` pairs where ``f`` applies from its ``E`` up to the next entry.
    """

    def __init__(self, constant: float = 1.22, table: Sequence[Sequence[float]] | None = None):
        if not constant >= 1.0:
            raise ValueError(f"f_ec must be >= 1, got {constant!r}")
        self.constant = constant
        self.table = None
        if table:
            rows = sorted((float(e), float(f)) for e, f in table)
            if any(f < 1.0 for _, f in rows):
                raise ValueError("f_ec table values must be >= 1")
            self.table = rows
            self._edges = [e for e, _ in rows]

    def __call__(self, E: float) -> float:
        if self.table is None:
            return self.constant
        i = bisect.bisect_right(self._edges, E) - 1
        return self.table[max(i, 0)][1]
