"""Pulse-level Monte Carlo of the source, fiber and threshold receiver.

This is an independent check on :mod:`decoyrate.channel`: it never evaluates
the closed-form yields, it samples the click pattern of every pulse.

Event model per pulse: ``n ~ Poisson(mu)``; each photon survives fiber and
detector with probability ``eta``; bases match with probability
``sift_factor``; on a basis match each surviving photon goes to the wrong
detector with probability ``e_mis``, otherwise to either detector with
probability 1/2; detector ``D_i`` dark-counts with probability ``d_i``
independently. A double click yields a fair random bit.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence``. A run of ``N`` pulses is cut into fixed-size shards; shard
``k`` of stream ``s`` uses ``SeedSequence(seed, spawn_key=(s, k))``. Decoy
intensity ``i`` is stream ``i``; a plain run is stream 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .channel import DetectorParams, LinkParams, SourceParams, YieldTable, transmittance
from .decoy import IntensityMeasurement

RNG_ID = "numpy.random.PCG64+SeedSequence(seed, spawn_key=(stream, shard))"
SHARD_PULSES = 1 << 22
MAX_PULSES = 10**10
N_TRACK = 8  # per-photon-number tallies for n < N_TRACK; larger n pooled in the last bin


class InsufficientStatistics(ValueError):
    pass


@dataclass(frozen=True)
class PulseOutcome:
    n_emitted: int
    alice_basis: str
    alice_bit: int
    bob_basis: str
    result: str  # "failure", "bit0" or "bit1"
    double_click: bool


@dataclass
class TallyReport:
    """Counts from a simulated run.

    ``detections_n[k]`` and ``errors_n[k]`` count sifted detections and errors
    from pulses that carried ``k`` photons (the last bin pools ``k >= N_TRACK-1``).
    """

    pulses: int = 0
    detected: int = 0
    sifted_detections: int = 0
    sifted_errors: int = 0
    double_clicks: int = 0
    emitted_n: list[int] = field(default_factory=lambda: [0] * N_TRACK)
    detections_n: list[int] = field(default_factory=lambda: [0] * N_TRACK)
    errors_n: list[int] = field(default_factory=lambda: [0] * N_TRACK)
    seed: int | None = None
    rng: str = RNG_ID

    def merge(self, other: "TallyReport") -> "TallyReport":
        return TallyReport(
            pulses=self.pulses + other.pulses,
            detected=self.detected + other.detected,
            sifted_detections=self.sifted_detections + other.sifted_detections,
            sifted_errors=self.sifted_errors + other.sifted_errors,
            double_clicks=self.double_clicks + other.double_clicks,
            emitted_n=[a + b for a, b in zip(self.emitted_n, other.emitted_n)],
            detections_n=[a + b for a, b in zip(self.detections_n, other.detections_n)],
            errors_n=[a + b for a, b in zip(self.errors_n, other.errors_n)],
            seed=self.seed if self.seed == other.seed else None,
            rng=self.rng,
        )

    __add__ = merge

    @property
    def Q(self) -> float:
        return self.sifted_detections / self.pulses if self.pulses else math.nan

    @property
    def E(self) -> float:
        return self.sifted_errors / self.sifted_detections if self.sifted_detections else math.nan

    @property
    def Q_stderr(self) -> float:
        q = self.Q
        return math.sqrt(q * (1 - q) / self.pulses) if self.pulses else math.nan

    @property
    def E_stderr(self) -> float:
        e = self.E
        return math.sqrt(e * (1 - e) / self.sifted_detections) if self.sifted_detections else math.nan

    def Q_n(self, n: int) -> float:
        return self.detections_n[n] / self.pulses if self.pulses else math.nan

    def e_n(self, n: int) -> float:
        k = self.detections_n[n]
        return self.errors_n[n] / k if k else math.nan

    def to_dict(self) -> dict:
        return {
            "pulses": self.pulses,
            "detected": self.detected,
            "sifted_detections": self.sifted_detections,
            "sifted_errors": self.sifted_errors,
            "double_clicks": self.double_clicks,
            "emitted_n": list(self.emitted_n),
            "detections_n": list(self.detections_n),
            "errors_n": list(self.errors_n),
            "seed": self.seed,
            "rng": self.rng,
            "Q": self.Q,
            "E": self.E,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TallyReport":
        keys = ("pulses", "detected", "sifted_detections", "sifted_errors", "double_clicks",
                "emitted_n", "detections_n", "errors_n", "seed", "rng")
        return cls(**{k: data[k] for k in keys})


@dataclass(frozen=True)
class _Device:
    mu: float
    eta: float
    e_mis: float
    d0: float
    d1: float
    sift: float

    @classmethod
    def build(cls, src: SourceParams, link: LinkParams, det: DetectorParams) -> "_Device":
        return cls(src.mu, transmittance(link, det), link.e_mis, det.d0, det.d1, src.sift_factor)


def _dark_mask(rng: np.random.Generator, size: int, p: float) -> np.ndarray:
    # Bernoulli(p) per gate, sampled as a binomial count at uniform positions.
    mask = np.zeros(size, dtype=bool)
    if p <= 0.0:
        return mask
    if p >= 0.01:
        return rng.random(size) < p
    k = rng.binomial(size, p)
    if k:
        mask[rng.choice(size, size=k, replace=False)] = True
    return mask


def _shard(dev: _Device, size: int, rng: np.random.Generator, keep: bool = False):
    """Simulate ``size`` pulses. Returns a TallyReport, plus raw arrays if ``keep``."""
    n = rng.poisson(dev.mu, size) if dev.mu > 0 else np.zeros(size, dtype=np.int64)
    k = np.zeros(size, dtype=np.int64)
    lit = np.flatnonzero(n)
    if lit.size:
        k[lit] = rng.binomial(n[lit], dev.eta)
    dark0 = _dark_mask(rng, size, dev.d0)
    dark1 = _dark_mask(rng, size, dev.d1)

    active = np.flatnonzero((k > 0) | dark0 | dark1)
    m = active.size
    ka = k[active]
    match = rng.random(m) < dev.sift
    bit = rng.integers(0, 2, m)
    p_wrong = np.where(match, dev.e_mis, 0.5)
    wrong = rng.binomial(ka, p_wrong)
    # Detector D_bit is the "correct" port for Alice's bit.
    d_bit = np.where(bit == 0, dark0[active], dark1[active])
    d_other = np.where(bit == 0, dark1[active], dark0[active])
    click_correct = (ka - wrong > 0) | d_bit
    click_wrong = (wrong > 0) | d_other
    double = click_correct & click_wrong
    coin = rng.random(m) < 0.5
    error = (click_wrong & ~click_correct) | (double & coin)

    na = np.minimum(n[active], N_TRACK - 1)
    sifted = match
    tally = TallyReport(
        pulses=size,
        detected=m,
        sifted_detections=int(sifted.sum()),
        sifted_errors=int((sifted & error).sum()),
        double_clicks=int(double.sum()),
        emitted_n=np.bincount(np.minimum(n, N_TRACK - 1), minlength=N_TRACK).tolist(),
        detections_n=np.bincount(na[sifted], minlength=N_TRACK).tolist(),
        errors_n=np.bincount(na[sifted & error], minlength=N_TRACK).tolist(),
    )
    if not keep:
        return tally
    alice_bit_all = rng.integers(0, 2, size)
    alice_bit_all[active] = bit
    return tally, dict(n=n, active=active, match=match, bit=bit, alice_bit=alice_bit_all,
                       error=error, double=double, rng=rng)


def _shard_sizes(n_pulses: int) -> list[int]:
    full, rest = divmod(n_pulses, SHARD_PULSES)
    return [SHARD_PULSES] * full + ([rest] if rest else [])


def _run_stream(dev: _Device, n_pulses: int, seed: int, stream: int, workers: int) -> TallyReport:
    if n_pulses < 1:
        raise ValueError(f"n_pulses must be >= 1, got {n_pulses!r}")
    if n_pulses > MAX_PULSES:
        raise MemoryError(f"n_pulses={n_pulses} exceeds the cap of {MAX_PULSES}")
    sizes = _shard_sizes(n_pulses)

    def job(i: int) -> TallyReport:
        ss = np.random.SeedSequence(seed, spawn_key=(stream, i))
        return _shard(dev, sizes[i], np.random.Generator(np.random.PCG64(ss)))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    total = TallyReport()
    for p in parts:
        total = total.merge(p)
    total.seed = seed
    return total


def simulate_run(
    src: SourceParams,
    link: LinkParams,
    det: DetectorParams,
    n_pulses: int,
    seed: int,
    workers: int = 1,
) -> TallyReport:
    """Simulate ``n_pulses`` pulses. Deterministic in ``(params, n_pulses, seed)``;
    ``workers`` only changes wall-clock time.
    """
    return _run_stream(_Device.build(src, link, det), n_pulses, seed, 0, workers)


def simulate_decoy_session(
    intensities: Sequence[float],
    link: LinkParams,
    det: DetectorParams,
    pulses_per_intensity: int,
    seed: int,
    sift_factor: float = 0.5,
    workers: int = 1,
) -> list[IntensityMeasurement]:
    if not intensities:
        raise ValueError("need at least one intensity")
    out = []
    for i, mu in enumerate(intensities):
        if mu < 0:
            raise ValueError(f"intensities must be >= 0, got {mu!r}")
        dev = _Device.build(SourceParams(mu=mu, sift_factor=sift_factor), link, det)
        t = _run_stream(dev, pulses_per_intensity, seed, i, workers)
        out.append(IntensityMeasurement(
            mu=mu,
            Q_mu=t.Q,
            E_mu=t.E if t.sifted_detections else 0.5,
            pulses=t.pulses,
            detections=t.sifted_detections,
            errors=t.sifted_errors,
        ))
    return out


def iter_outcomes(
    src: SourceParams, link: LinkParams, det: DetectorParams, n_pulses: int, seed: int
) -> Iterator[PulseOutcome]:
    """Per-pulse outcomes for small runs; intended for inspection and tests."""
    dev = _Device.build(src, link, det)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0, 0))))
    _, raw = _shard(dev, n_pulses, rng, keep=True)
    a_basis = raw["rng"].integers(0, 2, n_pulses)
    match = raw["rng"].random(n_pulses) < dev.sift
    match[raw["active"]] = raw["match"]
    pos = {int(p): j for j, p in enumerate(raw["active"])}
    bases = "ZX"
    for i in range(n_pulses):
        j = pos.get(i)
        ab = bases[a_basis[i]]
        bb = ab if match[i] else bases[1 - a_basis[i]]
        if j is None:
            yield PulseOutcome(int(raw["n"][i]), ab, int(raw["alice_bit"][i]), bb, "failure", False)
            continue
        b = int(raw["bit"][j]) ^ int(raw["error"][j])
        yield PulseOutcome(int(raw["n"][i]), ab, int(raw["bit"][j]), bb, f"bit{b}", bool(raw["double"][j]))


@dataclass
class DeviationReport:
    z: dict[str, float]
    threshold: float
    passed: bool
    failed: list[str]
    insufficient: bool = False

    def to_dict(self) -> dict:
        return {"z": self.z, "threshold": self.threshold, "passed": self.passed,
                "failed": self.failed, "insufficient_statistics": self.insufficient}


def _z(observed: float, expected: float, var: float) -> float:
    if var <= 0.0:
        return 0.0 if observed == expected else math.inf
    return (observed - expected) / math.sqrt(var)


def compare_to_analytic(
    tally: TallyReport, table: YieldTable, threshold: float = 4.0, n_check: int = 3
) -> DeviationReport:
    """z-scores of simulated Q, E, Q_n, e_n (n <= n_check) against the model.

    Standard errors are binomial, using the model's probabilities and the
    simulated trial counts.
    """
    if tally.pulses == 0 or tally.sifted_detections == 0:
        return DeviationReport(z={}, threshold=threshold, passed=False, failed=[], insufficient=True)
    N = tally.pulses
    z = {
        "Q": _z(tally.Q, table.Q, table.Q * (1 - table.Q) / N),
        "E": _z(tally.E, table.E, table.E * (1 - table.E) / tally.sifted_detections),
    }
    for n in range(n_check + 1):
        q = table.gain(n)
        z[f"Q{n}"] = _z(tally.Q_n(n), q, q * (1 - q) / N)
        k = tally.detections_n[n]
        if k:
            e = table.qber(n)
            z[f"e{n}"] = _z(tally.e_n(n), e, e * (1 - e) / k)
    failed = [name for name, v in z.items() if not abs(v) <= threshold]
    return DeviationReport(z=z, threshold=threshold, passed=not failed, failed=failed)
