"""Progress-series metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InputError


@dataclass(frozen=True)
class Correlation:
    r: float
    degenerate: bool = False

    def __float__(self) -> float:
        return self.r


def _check(a, b, min_len: int) -> None:
    if len(a) != len(b):
        raise InputError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < min_len:
        raise InputError(f"need at least {min_len} values, got {len(a)}")


def pearson(a, b) -> Correlation:
    """Sample Pearson correlation; zero variance in either input gives r = 0 flagged degenerate."""
    _check(a, b, 2)
    n = len(a)
    ma = math.fsum(a) / n
    mb = math.fsum(b) / n
    da = [x - ma for x in a]
    db = [y - mb for y in b]
    saa = math.fsum(x * x for x in da)
    sbb = math.fsum(y * y for y in db)
    # separate roots so tiny variances do not underflow in the product
    den = math.sqrt(saa) * math.sqrt(sbb)
    if den == 0.0:
        return Correlation(0.0, True)
    r = math.fsum(x * y for x, y in zip(da, db)) / den
    return Correlation(max(-1.0, min(1.0, r)))


def l2_distance(a, b) -> float:
    """Euclidean norm of the elementwise difference (inputs on the percent scale)."""
    _check(a, b, 0)
    return math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(a, b)))


def frame_index_correlation(pred) -> Correlation:
    return pearson(list(pred), list(range(len(pred))))


def mean_se(values) -> tuple[float, float]:
    """Mean and standard error (sample standard deviation over sqrt(n)); SE is 0 for n = 1."""
    vals = list(values)
    if not vals:
        raise InputError("mean_se of an empty list")
    n = len(vals)
    m = math.fsum(vals) / n
    if n == 1:
        return m, 0.0
    var = math.fsum((x - m) ** 2 for x in vals) / (n - 1)
    return m, math.sqrt(var / n)
