"""Latency statistics: integer-ns values in, deterministic summary out."""

from __future__ import annotations

import math
from dataclasses import dataclass

HISTOGRAM_BIN_NS = 1_000  # fixed 1 us bins


@dataclass(frozen=True)
class RunStats:
    count: int
    min_ns: int
    max_ns: int
    mean_ns: float
    stddev_ns: float
    p50_ns: int
    p99_ns: int
    jitter_ns: int  # max - min
    histogram: tuple[tuple[int, int], ...]  # (bin in us, count), sorted

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "min_ns": self.min_ns,
            "max_ns": self.max_ns,
            "mean_ns": self.mean_ns,
            "stddev_ns": self.stddev_ns,
            "p50_ns": self.p50_ns,
            "p99_ns": self.p99_ns,
            "jitter_ns": self.jitter_ns,
            "histogram_us": [list(pair) for pair in self.histogram],
        }


def percentile_nearest_rank(sorted_values, q: float) -> int:
    """Nearest-rank percentile: the ceil(q*n)-th smallest value."""
    if not sorted_values:
        raise ValueError("percentile of empty data")
    if not 0 < q <= 1:
        raise ValueError(f"q must be in (0, 1], got {q}")
    rank = math.ceil(q * len(sorted_values))
    return sorted_values[rank - 1]


def compute_stats(values_ns) -> RunStats:
    """Summarize a batch of integer-ns configuration times."""
    values = sorted(values_ns)
    if not values:
        raise ValueError("no values to summarize")
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n
    bins: dict[int, int] = {}
    for v in values:
        bins[v // HISTOGRAM_BIN_NS] = bins.get(v // HISTOGRAM_BIN_NS, 0) + 1
    return RunStats(
        count=n,
        min_ns=values[0],
        max_ns=values[-1],
        mean_ns=mean,
        stddev_ns=math.sqrt(variance),
        p50_ns=percentile_nearest_rank(values, 0.50),
        p99_ns=percentile_nearest_rank(values, 0.99),
        jitter_ns=values[-1] - values[0],
        histogram=tuple(sorted(bins.items())),
    )


def ns_to_us_str(ns: int) -> str:
    """Format integer ns as us with one decimal, round half up.

    Exact for values on the 100 ns grid, which covers everything exported.
    """
    if ns < 0:
        raise ValueError(f"negative time {ns}")
    tenths = (ns + 50) // 100
    return f"{tenths // 10}.{tenths % 10}"


def us_str_to_ns(text: str) -> int:
    """Inverse of ns_to_us_str on its one-decimal output."""
    whole, _, frac = text.partition(".")
    if len(frac) != 1:
        raise ValueError(f"expected one decimal digit: {text!r}")
    return int(whole) * 1_000 + int(frac) * 100


def ks_statistic_uniform(values, lo: int, hi: int) -> float:
    """One-sample two-sided KS statistic against uniform on [lo, hi).

    Continuous-uniform reference; with a discrete grid the statistic is
    conservative (never understates the distance).
    """
    if hi <= lo:
        raise ValueError("need hi > lo")
    values = sorted(values)
    n = len(values)
    if n == 0:
        raise ValueError("no values")
    width = hi - lo
    d = 0.0
    for i, v in enumerate(values):
        cdf = min(max((v - lo) / width, 0.0), 1.0)
        d = max(d, abs((i + 1) / n - cdf), abs(cdf - i / n))
    return d


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sided KS critical value c(alpha)/sqrt(n)."""
    # c(alpha) = sqrt(-ln(alpha/2)/2); 1.62762 at the 1% level
    return math.sqrt(-math.log(alpha / 2.0) / 2.0) / math.sqrt(n)
