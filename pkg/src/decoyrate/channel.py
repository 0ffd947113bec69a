"""Photon-number-resolved model of a weak coherent source, a lossy fiber and a
two-detector threshold receiver.

All detection quantities are per emitted pulse and already include the
sifting factor, so ``YieldTable.Q`` is directly the sifted gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .mathkernel import _check_probability, poisson_tail, truncation_order

# Default combined dark-count probability of the two detectors, split evenly.
GYS_DARK = 1.7e-6
_GYS_DARK_EACH = 1.0 - math.sqrt(1.0 - GYS_DARK)


@dataclass(frozen=True)
class DetectorParams:
    """Two threshold detectors with common efficiency ``eta_d``.

    ``d0`` and ``d1`` are per-gate dark-count probabilities of the two
    detectors; they may differ.
    """

    eta_d: float = 0.045
    d0: float = _GYS_DARK_EACH
    d1: float = _GYS_DARK_EACH

    def __post_init__(self) -> None:
        _check_probability(self.eta_d, "eta_d")
        _check_probability(self.d0, "d0")
        _check_probability(self.d1, "d1")

    @classmethod
    def from_combined_dark(cls, eta_d: float, d: float) -> "DetectorParams":
        """Split a combined dark probability symmetrically, ``d0 = d1 = 1 - sqrt(1 - d)``."""
        _check_probability(d, "d")
        di = 1.0 - math.sqrt(1.0 - d)
        return cls(eta_d=eta_d, d0=di, d1=di)

    @property
    def d(self) -> float:
        return combined_dark(self.d0, self.d1)


@dataclass(frozen=True)
class LinkParams:
    alpha_db_per_km: float = 0.21
    length_km: float = 0.0
    e_mis: float = 0.033

    def __post_init__(self) -> None:
        if not self.alpha_db_per_km >= 0:
            raise ValueError(f"alpha_db_per_km must be >= 0, got {self.alpha_db_per_km!r}")
        if not self.length_km >= 0:
            raise ValueError(f"length_km must be >= 0, got {self.length_km!r}")
        if not (0.0 <= self.e_mis <= 0.5):
            raise ValueError(f"e_mis must lie in [0, 0.5], got {self.e_mis!r}")


@dataclass(frozen=True)
class SourceParams:
    mu: float = 0.5
    sift_factor: float = 0.5

    def __post_init__(self) -> None:
        if not self.mu >= 0:
            raise ValueError(f"mu must be >= 0, got {self.mu!r}")
        _check_probability(self.sift_factor, "sift_factor")


@dataclass(frozen=True)
class YieldTable:
    """Per-photon-number yields, sifted gains and error rates up to ``n_max``.

    Photon numbers above ``n_max`` are lumped into ``tail_gain`` as detected
    multiphoton events with error rate 1/2.
    """

    n_max: int
    Y: np.ndarray
    Q_n: np.ndarray
    e_n: np.ndarray
    Q: float
    E: float
    tail_gain: float
    mu: float
    sift_factor: float

    @property
    def Q0(self) -> float:
        return float(self.Q_n[0])

    @property
    def Q1(self) -> float:
        return float(self.Q_n[1]) if self.n_max >= 1 else 0.0

    @property
    def e1(self) -> float:
        return float(self.e_n[1]) if self.n_max >= 1 else 0.5

    @property
    def Y1(self) -> float:
        return float(self.Y[1]) if self.n_max >= 1 else 0.0

    def gain(self, n: int) -> float:
        return float(self.Q_n[n]) if n <= self.n_max else 0.0

    def qber(self, n: int) -> float:
        return float(self.e_n[n]) if n <= self.n_max else 0.5


def combined_dark(d0: float, d1: float) -> float:
    """Probability that at least one of two independent detectors has a dark count."""
    _check_probability(d0, "d0")
    _check_probability(d1, "d1")
    return d0 + d1 - d0 * d1


def transmittance(link: LinkParams, det: DetectorParams) -> float:
    """Overall single-photon detection probability: fiber loss times detector efficiency."""
    return det.eta_d * 10.0 ** (-link.alpha_db_per_km * link.length_km / 10.0)


def _arrival(eta, n):
    """Probability that at least one of ``n`` photons survives, ``1 - (1 - eta)**n``."""
    n = np.asarray(n)
    if eta >= 1.0:
        return np.where(n > 0, 1.0, 0.0)
    return -np.expm1(n * np.log1p(-eta))


def yield_n(eta: float, d: float, n: int) -> float:
    """Probability of at least one click given ``n`` photons were emitted.

    Written as ``d + (1 - d) * s_n`` so that the vacuum yield is exactly ``d``.
    """
    return float(d + (1.0 - d) * _arrival(eta, n))


def error_n(eta: float, d: float, e_mis: float, n: int) -> float:
    """QBER of ``n``-photon events.

    Dark counts carry a random bit; signal clicks are wrong with probability
    ``e_mis``. Coincidences of dark counts with signal clicks and double
    clicks from split multiphoton pulses are neglected (see
    :func:`error_n_exact` for the full click model).
    """
    y = yield_n(eta, d, n)
    if y == 0.0:
        return 0.5
    s = float(_arrival(eta, n))
    return (0.5 * d * (1.0 - s) + e_mis * s) / y


def error_n_exact(eta: float, d0: float, d1: float, e_mis: float, n: int) -> float:
    """QBER of ``n``-photon events under the full per-photon click model.

    Each surviving photon reaches the wrong detector with probability
    ``e_mis``; double clicks are resolved by a fair coin. Averaged over
    Alice's bit, the error probability times the yield is
    ``(1 - P(no click) + P(correct silent) - P(wrong silent)) / 2``.
    """
    d = combined_dark(d0, d1)
    y = d + (1.0 - d) * float(_arrival(eta, n))
    if y == 0.0:
        return 0.5
    quiet = 0.5 * ((1.0 - d0) + (1.0 - d1))
    # P(correct silent) - P(wrong silent), written with arrival terms to avoid cancellation
    diff = quiet * (float(_arrival(eta * e_mis, n)) - float(_arrival(eta * (1.0 - e_mis), n)))
    return 0.5 * (y + diff) / y


def build_yield_table(
    src: SourceParams,
    link: LinkParams,
    det: DetectorParams,
    tail_tol: float = 1e-12,
) -> YieldTable:
    eta = transmittance(link, det)
    d = det.d
    n_max = max(truncation_order(src.mu, tail_tol), 1)
    ns = np.arange(n_max + 1)
    if src.mu > 0:
        pmf = np.exp(ns * math.log(src.mu) - src.mu - special.gammaln(ns + 1))
    else:
        pmf = (ns == 0).astype(float)
    Y = d + (1.0 - d) * _arrival(eta, ns)
    s = _arrival(eta, ns)
    e = np.where(Y > 0, (0.5 * d * (1.0 - s) + link.e_mis * s) / np.where(Y > 0, Y, 1.0), 0.5)
    Q_n = src.sift_factor * pmf * Y
    tail_gain = src.sift_factor * poisson_tail(src.mu, n_max)
    Q = float(Q_n.sum() + tail_gain)
    err = float((Q_n * e).sum() + 0.5 * tail_gain)
    E = err / Q if Q > 0 else 0.5
    return YieldTable(
        n_max=n_max,
        Y=Y,
        Q_n=Q_n,
        e_n=e,
        Q=Q,
        E=E,
        tail_gain=tail_gain,
        mu=src.mu,
        sift_factor=src.sift_factor,
    )


def single_photon_channel(
    link: LinkParams, det: DetectorParams, sift_factor: float = 0.5
) -> tuple[float, float]:
    """Sifted gain and QBER of an ideal source emitting exactly one photon per pulse."""
    eta = transmittance(link, det)
    d = det.d
    return sift_factor * yield_n(eta, d, 1), error_n(eta, d, link.e_mis, 1)
