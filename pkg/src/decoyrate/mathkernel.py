"""Binary entropy and Poisson photon-number statistics."""

from __future__ import annotations

import math

import numpy as np
from scipy import special


def _check_probability(p: float, name: str = "p") -> None:
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


def binary_entropy(p: float) -> float:
    """Shannon entropy of a Bernoulli(p) variable, in bits.

    Endpoints return exactly 0. The computation is done on ``min(p, 1 - p)``
    so that ``binary_entropy(p) == binary_entropy(1 - p)`` whenever the
    floating-point complement is exact.
    """
    _check_probability(p)
    q = min(p, 1.0 - p)
    if q == 0.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def poisson_pmf(mu: float, n: int) -> float:
    """Probability that a Poisson source of mean ``mu`` emits ``n`` photons.

    Evaluated as ``exp(n ln mu - mu - ln n!)`` to stay finite for large ``n``.
    """
    if mu < 0:
        raise ValueError(f"mu must be non-negative, got {mu!r}")
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n!r}")
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mu) - mu - special.gammaln(n + 1))


def poisson_tail(mu: float, n_max: int) -> float:
    """P(n > n_max) for a Poisson source of mean ``mu``, clamped to [0, 1].

    Uses the regularized incomplete gamma function, which equals
    ``1 - sum(poisson_pmf(mu, n) for n <= n_max)`` without the cancellation.
    """
    if mu < 0:
        raise ValueError(f"mu must be non-negative, got {mu!r}")
    if n_max < 0:
        raise ValueError(f"n_max must be non-negative, got {n_max!r}")
    if mu == 0.0:
        return 0.0
    return min(1.0, max(0.0, float(special.gammainc(n_max + 1, mu))))


def truncation_order(mu: float, tail_tol: float = 1e-12) -> int:
    """Smallest ``n_max`` with ``poisson_tail(mu, n_max) < tail_tol``."""
    if mu == 0.0:
        return 0
    n = 0
    while True:
        ns = np.arange(n, n + 64)
        below = np.flatnonzero(special.gammainc(ns + 1, mu) < tail_tol)
        if below.size:
            return int(ns[below[0]])
        n += 64
