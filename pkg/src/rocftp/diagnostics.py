"""Summary statistics and goodness-of-fit checks against a mixture target."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .targets import Target

KOLMOGOROV_TERMS = 100


@dataclass(frozen=True)
class SixNumberSummary:
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.min, self.q1, self.median, self.mean, self.q3, self.max)


def summary_stats(values) -> SixNumberSummary:
    """Min, quartiles (linear interpolation of order statistics), mean, max."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("summary of an empty vector")
    q = np.quantile(x, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return SixNumberSummary(q[0], q[1], q[2], float(x.mean()), q[3], q[4])


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0.0:
        return 1.0
    total = 0.0
    for k in range(1, KOLMOGOROV_TERMS + 1):
        total += (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
    return min(max(2.0 * total, 0.0), 1.0)


def ks_statistic(samples, target: Target) -> tuple[float, float]:
    """One-sample KS distance to the target CDF and its asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n == 0:
        raise ValueError("KS statistic of an empty sample")
    f = target.cdf(x)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    # the alternating series is useless near 0, where the survival is 1 anyway
    lam = math.sqrt(n) * d
    p = 1.0 if lam < 0.2 else kolmogorov_sf(lam)
    return d, p


def qq_outliers(samples, target: Target, delta: float = 0.5) -> tuple[int, np.ndarray]:
    """Sorted positions whose sample quantile is more than ``delta`` from theory."""
    if not delta > 0:
        raise ValueError("delta must be > 0")
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n == 0:
        return 0, np.empty(0, dtype=np.int64)
    theory = target.quantile((np.arange(1, n + 1) - 0.5) / n)
    idx = np.flatnonzero(np.abs(x - theory) > delta)
    return int(idx.size), idx


@dataclass(frozen=True)
class ModeMass:
    lo: float
    hi: float
    observed: float
    expected: float


def mode_masses(samples, target: Target, boundaries=None) -> list[ModeMass]:
    """Observed vs target probability of the regions between mode boundaries."""
    x = np.asarray(samples, dtype=np.float64)
    cuts = list(target.mode_boundaries() if boundaries is None else boundaries)
    edges = [-math.inf] + cuts + [math.inf]
    out = []
    for lo, hi in zip(edges, edges[1:]):
        observed = float(np.mean((x >= lo) & (x < hi))) if x.size else float("nan")
        expected = float(target.cdf(hi) - target.cdf(lo))
        out.append(ModeMass(lo, hi, observed, expected))
    return out
