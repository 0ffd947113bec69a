"""Device configuration: a flat JSON document with strict validation.

Defaults reproduce the fiber experiment used for the rate-vs-distance
comparison. Its dark-count probability is printed in the source as
``1.7x10^6``; that cannot be a probability and is read as ``1.7e-6``, the
combined probability of a dark count in either detector.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

from .channel import GYS_DARK, DetectorParams, LinkParams, SourceParams
from .rates import ECInefficiency

DARK_COUNT_NOTICE = (
    "notice: default dark-count probability d = 1.7e-6 (combined over both detectors); "
    "the published value '1.7x10^6' is read with a negative exponent"
)

MODES = ("oracle", "decoy")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class DeviceConfig:
    mu: float = 0.5
    nu: float = 0.05
    sift_factor: float = 0.5
    eta_d: float = 0.045
    dark_count: float = GYS_DARK
    d0: float | None = None
    d1: float | None = None
    alpha_db_per_km: float = 0.21
    length_km: float = 0.0
    e_mis: float = 0.033
    f_ec: float = 1.22
    f_ec_table: list[list[float]] | None = None
    mode: str = "oracle"
    seed: int = 0
    pulses: int = 10_000_000
    max_pulses: int = 10**10
    mu_min: float = 1e-5
    mu_max: float = 1.0

    def __post_init__(self) -> None:
        def prob(name: str) -> None:
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ConfigError(name, f"must lie in [0, 1], got {v!r}")

        for name in ("sift_factor", "eta_d", "dark_count", "d0", "d1"):
            prob(name)
        if self.sift_factor <= 0.0:
            raise ConfigError("sift_factor", "must be positive")
        for name in ("mu", "nu", "alpha_db_per_km", "length_km"):
            if not getattr(self, name) >= 0:
                raise ConfigError(name, f"must be >= 0, got {getattr(self, name)!r}")
        if not 0.0 <= self.e_mis <= 0.5:
            raise ConfigError("e_mis", f"must lie in [0, 0.5], got {self.e_mis!r}")
        if not self.f_ec >= 1.0:
            raise ConfigError("f_ec", f"must be >= 1, got {self.f_ec!r}")
        if self.f_ec_table is not None:
            try:
                ECInefficiency(self.f_ec, self.f_ec_table)
            except (TypeError, ValueError) as exc:
                raise ConfigError("f_ec_table", f"expected [[E, f], ...] with f >= 1 ({exc})") from None
        if (self.d0 is None) != (self.d1 is None):
            raise ConfigError("d0", "d0 and d1 must be given together")
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        for name in ("pulses", "max_pulses"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(name, f"must be a positive integer, got {v!r}")
        if self.pulses > self.max_pulses:
            raise ConfigError("pulses", f"{self.pulses} exceeds max_pulses={self.max_pulses}")
        if not 0.0 < self.mu_min < self.mu_max:
            raise ConfigError("mu_min", "need 0 < mu_min < mu_max")

    # -- component views ---------------------------------------------------
    def source(self, mu: float | None = None) -> SourceParams:
        return SourceParams(mu=self.mu if mu is None else mu, sift_factor=self.sift_factor)

    def link(self, length_km: float | None = None, e_mis: float | None = None) -> LinkParams:
        return LinkParams(
            alpha_db_per_km=self.alpha_db_per_km,
            length_km=self.length_km if length_km is None else length_km,
            e_mis=self.e_mis if e_mis is None else e_mis,
        )

    def detector(self) -> DetectorParams:
        if self.d0 is not None:
            return DetectorParams(eta_d=self.eta_d, d0=self.d0, d1=self.d1)
        return DetectorParams.from_combined_dark(self.eta_d, self.dark_count)

    def ec(self) -> ECInefficiency:
        return ECInefficiency(self.f_ec, self.f_ec_table)

    def with_(self, **changes: Any) -> "DeviceConfig":
        return replace(self, **changes)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DeviceConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        clean = {}
        for key, value in data.items():
            if key in ("seed", "pulses", "max_pulses"):
                if isinstance(value, float) and value.is_integer():
                    value = int(value)
            elif key == "mode" or key == "f_ec_table":
                pass
            elif value is not None:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(key, f"expected a number, got {value!r}")
                value = float(value)
            clean[key] = value
        return cls(**clean)

    @classmethod
    def from_json(cls, text: str) -> "DeviceConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON ({exc})") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "DeviceConfig":
        return cls.from_json(Path(path).read_text())


DEFAULTS = DeviceConfig()
