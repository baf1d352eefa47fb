"""Student-t 95% confidence intervals over experiment repetitions.

n is small (5 seeds), so the half-width uses t_{0.975, n-1} from an embedded
constant table rather than a normal quantile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from mialab.errors import DataError

# two-sided 95% Student-t quantiles, df = 1..30
T_975 = {
    1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571,
    6: 2.447, 7: 2.365, 8: 2.306, 9: 2.262, 10: 2.228,
    11: 2.201, 12: 2.179, 13: 2.160, 14: 2.145, 15: 2.131,
    16: 2.120, 17: 2.110, 18: 2.101, 19: 2.093, 20: 2.086,
    21: 2.080, 22: 2.074, 23: 2.069, 24: 2.064, 25: 2.060,
    26: 2.056, 27: 2.052, 28: 2.048, 29: 2.045, 30: 2.042,
}
_Z_975 = 1.960  # fallback beyond the table


@dataclass(frozen=True)
class IntervalEstimate:
    mean: float
    half_width: float
    n: int
    level: float = 0.95


def confidence_interval(values: Sequence[float], level: float = 0.95) -> IntervalEstimate:
    values = [float(v) for v in values]
    n = len(values)
    if n < 2:
        raise DataError(f"need >= 2 repetitions, got {n}")
    if level != 0.95:
        raise DataError("only level=0.95 is supported")
    mean = sum(values) / n
    if max(values) == min(values):
        return IntervalEstimate(mean=values[0], half_width=0.0, n=n)
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    t = T_975.get(n - 1, _Z_975)
    return IntervalEstimate(mean=mean, half_width=t * sd / math.sqrt(n), n=n)
