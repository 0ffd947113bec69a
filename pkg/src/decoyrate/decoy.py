"""Vacuum + weak decoy estimation of vacuum and single-photon contributions.

Bounds follow the standard asymptotic vacuum+weak decoy analysis: the signal
intensity ``mu``, one weak decoy ``nu < mu`` and a vacuum decoy. Measured
gains are sifted; they are divided by the sifting factor before use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channel import DetectorParams, LinkParams, SourceParams, YieldTable, build_yield_table


class InvalidDecoyConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class IntensityMeasurement:
    mu: float
    Q_mu: float
    E_mu: float
    # Raw counts, present when the measurement came from a simulation.
    pulses: int | None = None
    detections: int | None = None
    errors: int | None = None

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise ValueError(f"intensity must be >= 0, got {self.mu!r}")
        if self.Q_mu < 0:
            raise ValueError(f"gain must be >= 0, got {self.Q_mu!r}")
        if not 0.0 <= self.E_mu <= 1.0:
            raise ValueError(f"QBER must lie in [0, 1], got {self.E_mu!r}")


@dataclass(frozen=True)
class DecoyEstimate:
    Y0: float
    Y1_lower: float
    Q0: float
    Q1_lower: float
    e1_upper: float
    mu: float
    nu: float
    vacuous: bool = False


def estimate_vacuum_weak(
    signal: IntensityMeasurement,
    weak: IntensityMeasurement,
    vacuum: IntensityMeasurement,
    sift: float = 0.5,
) -> DecoyEstimate:
    """Lower-bound ``Y1`` and upper-bound ``e1`` from three intensities.

    Raises
    ------
    InvalidDecoyConfiguration
        If the weak intensity is not strictly between 0 and the signal, or the
        vacuum intensity is nonzero.
    """
    mu, nu = signal.mu, weak.mu
    if vacuum.mu != 0.0:
        raise InvalidDecoyConfiguration(f"vacuum decoy must have intensity 0, got {vacuum.mu!r}")
    if not 0.0 < nu < mu:
        raise InvalidDecoyConfiguration(f"need 0 < nu < mu, got nu={nu!r}, mu={mu!r}")
    if not 0.0 < sift <= 1.0:
        raise InvalidDecoyConfiguration(f"sifting factor must lie in (0, 1], got {sift!r}")

    Y0 = vacuum.Q_mu / sift
    gain_nu = weak.Q_mu * math.exp(nu) / sift
    gain_mu = signal.Q_mu * math.exp(mu) / sift
    Y1 = (mu / (mu * nu - nu * nu)) * (
        gain_nu - (nu * nu / (mu * mu)) * gain_mu - ((mu * mu - nu * nu) / (mu * mu)) * Y0
    )
    err_nu = weak.E_mu * gain_nu - 0.5 * Y0

    vacuous = False
    if Y1 <= 0.0:
        Y1, e1, vacuous = 0.0, 0.5, True
    else:
        e1 = err_nu / (Y1 * nu)
        if e1 >= 0.5:
            e1, vacuous = 0.5, True
        e1 = max(e1, 0.0)

    return DecoyEstimate(
        Y0=Y0,
        Y1_lower=Y1,
        Q0=sift * math.exp(-mu) * Y0,
        Q1_lower=sift * mu * math.exp(-mu) * Y1,
        e1_upper=e1,
        mu=mu,
        nu=nu,
        vacuous=vacuous,
    )


def analytic_measurements(
    intensities,
    link: LinkParams,
    det: DetectorParams,
    sift: float = 0.5,
) -> list[IntensityMeasurement]:
    """Noise-free measurements taken from the channel model."""
    out = []
    for mu in intensities:
        table = build_yield_table(SourceParams(mu=mu, sift_factor=sift), link, det)
        out.append(IntensityMeasurement(mu=mu, Q_mu=table.Q, E_mu=table.E))
    return out


@dataclass
class BracketReport:
    passed: bool
    checks: dict[str, bool]
    slack: dict[str, float]
    estimate: DecoyEstimate
    truth: dict[str, float] = field(default_factory=dict)

    def lines(self) -> list[str]:
        rows = []
        for key in ("Y1", "e1", "Q1"):
            bound = {"Y1": "Y1_lower", "e1": "e1_upper", "Q1": "Q1_lower"}[key]
            rows.append(
                f"{bound:>9} = {getattr(self.estimate, bound):.6e}  true {key} = {self.truth[key]:.6e}"
                f"  slack {100 * self.slack[key]:+.3f}%  {'ok' if self.checks[key] else 'VIOLATED'}"
            )
        return rows


def bounds_bracket_check(est: DecoyEstimate, truth: YieldTable) -> BracketReport:
    """Check that each decoy bound sits on the safe side of the true value.

    Slack is the relative distance from the bound to the truth, positive when
    the bound is conservative.
    """
    true = {"Y1": truth.Y1, "e1": truth.e1, "Q1": truth.Q1}
    checks = {
        "Y1": est.Y1_lower <= true["Y1"],
        "e1": est.e1_upper >= true["e1"],
        "Q1": est.Q1_lower <= true["Q1"],
    }

    def rel(a: float, b: float) -> float:
        return (a - b) / a if a != 0 else 0.0

    slack = {
        "Y1": rel(true["Y1"], est.Y1_lower),
        "e1": -rel(true["e1"], est.e1_upper),
        "Q1": rel(true["Q1"], est.Q1_lower),
    }
    return BracketReport(passed=all(checks.values()), checks=checks, slack=slack, estimate=est, truth=true)
