"""Asymptotic key rates for decoy-state BB84 with weak coherent pulses and
threshold detectors."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    DetectorParams,
    LinkParams,
    SourceParams,
    YieldTable,
    build_yield_table,
    combined_dark,
    error_n,
    transmittance,
    yield_n,
)
from .config import DeviceConfig  # noqa: E402
from .mathkernel import binary_entropy, poisson_pmf, poisson_tail  # noqa: E402
from .rates import (  # noqa: E402
    RateBreakdown,
    RateInputs,
    rate_gllp,
    rate_ideal_single_photon,
    rate_koashi,
    rate_no_decoy_baseline,
)
