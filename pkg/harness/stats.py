"""
Batch statistics: quantiles of run lengths and error rates with a 95% interval.

Intervals use the normal approximation ``p +/- 1.96 * sqrt(p (1 - p) / T)``
clipped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

_Z_95 = 1.959963984540054  # ~N(0,1) quantile for 95% CI


@dataclass(frozen=True)
class Quantiles:
    p50: float
    p95: float
    max: float

    def as_payload(self) -> Dict[str, float]:
        return {"p50": self.p50, "p95": self.p95, "max": self.max}


@dataclass(frozen=True)
class RateEstimate:
    errors: int
    total: int
    rate: float
    low: float
    high: float

    def as_payload(self) -> Dict[str, Any]:
        return {
            "errors": self.errors,
            "total": self.total,
            "rate": self.rate,
            "ci95": [self.low, self.high],
        }


def quantiles(values: Sequence[float]) -> Optional[Quantiles]:
    if len(values) == 0:
        return None
    data = np.asarray(values, dtype=float)
    return Quantiles(
        p50=float(np.quantile(data, 0.5)),
        p95=float(np.quantile(data, 0.95)),
        max=float(data.max()),
    )


def median(values: Sequence[float]) -> Optional[float]:
    if len(values) == 0:
        return None
    return float(np.median(np.asarray(values, dtype=float)))


def error_rate(errors: int, total: int) -> RateEstimate:
    if total < 0 or not 0 <= errors <= max(total, 0):
        raise ValueError(f"invalid error count {errors} of {total}")
    if total == 0:
        return RateEstimate(errors=0, total=0, rate=0.0, low=0.0, high=0.0)
    p = errors / total
    se = math.sqrt(max(p * (1.0 - p), 0.0) / total)
    return RateEstimate(
        errors=errors,
        total=total,
        rate=p,
        low=max(0.0, p - _Z_95 * se),
        high=min(1.0, p + _Z_95 * se),
    )


def miss_rate_bound(k: int, trials: int, sigmas: float = 3.0) -> float:
    """Upper acceptance bound for a per-observation miss probability of 2**-k."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    q = math.ldexp(1.0, -k)
    return q + sigmas * math.sqrt(q * (1.0 - q) / trials)
