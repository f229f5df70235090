"""Empirical distributions, goodness-of-fit statistics, histograms, moments.

KS statistics are exact sup-norm distances (no asymptotic approximation in
the statistic itself); pass/fail interpretation belongs to the caller via
documented critical values.  For reference, the asymptotic Kolmogorov
critical value at level alpha for N samples is c(alpha)/sqrt(N) with
c(0.01) ~= 1.63 and c(0.001) ~= 1.95.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .references import ReferenceCdf


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted sample container; construction sorts once, consumers never mutate."""

    sorted_samples: np.ndarray
    count: int

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalDistribution":
        arr = np.sort(np.asarray(samples, dtype=np.float64))
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("need a nonempty 1-d sample array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        return cls(sorted_samples=arr, count=int(arr.size))


def _as_empirical(samples) -> EmpiricalDistribution:
    if isinstance(samples, EmpiricalDistribution):
        return samples
    return EmpiricalDistribution.from_samples(samples)


def ks_one_sample(samples, cdf: ReferenceCdf | callable) -> float:
    """Exact one-sample KS statistic sup_x max(|F_n(x) - F(x)|, |F_n(x-) - F(x)|)."""
    emp = _as_empirical(samples)
    n = emp.count
    f = np.asarray(cdf(emp.sorted_samples), dtype=np.float64)
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(upper - f), np.max(f - lower)))


def ks_two_sample(a, b) -> float:
    """Sup-norm distance between two ECDFs, computed by a merge scan."""
    ea, eb = _as_empirical(a), _as_empirical(b)
    grid = np.concatenate([ea.sorted_samples, eb.sorted_samples])
    fa = np.searchsorted(ea.sorted_samples, grid, side="right") / ea.count
    fb = np.searchsorted(eb.sorted_samples, grid, side="right") / eb.count
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True, eq=False)
class Histogram:
    """Uniform-bin histogram over a caller-fixed range [lo, hi).

    ``density`` is counts / (total_count * bin_width), so density times
    width sums to the in-range fraction.  Out-of-range samples are counted
    separately (below lo / at-or-above hi) rather than clipped.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    below: int
    above: int
    total: int

    @property
    def in_range_fraction(self) -> float:
        return float(self.counts.sum() / self.total)

    def to_csv(self, path: str) -> None:
        """Schema: header ``bin_left,bin_right,count,density``, one row per
        bin, final row ``out_of_range,<lo-count>,<hi-count>,``."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())

    def to_csv_text(self) -> str:
        lines = ["bin_left,bin_right,count,density"]
        for i in range(self.counts.size):
            lines.append(
                f"{self.bin_edges[i]:.17g},{self.bin_edges[i + 1]:.17g},"
                f"{int(self.counts[i])},{self.density[i]:.17g}"
            )
        lines.append(f"out_of_range,{self.below},{self.above},")
        return "\n".join(lines) + "\n"


def histogram(samples, bin_count: int, value_range: tuple[float, float]) -> Histogram:
    """Histogram with ``bin_count`` uniform bins over [lo, hi)."""
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    lo, hi = float(value_range[0]), float(value_range[1])
    if not lo < hi:
        raise ValueError("histogram range must satisfy lo < hi")
    emp = _as_empirical(samples)
    arr = emp.sorted_samples
    edges = lo + (hi - lo) * np.arange(bin_count + 1) / bin_count
    below = int(np.searchsorted(arr, lo, side="left"))
    at_or_above_hi = int(arr.size - np.searchsorted(arr, hi, side="left"))
    idx = np.clip(((arr - lo) / (hi - lo) * bin_count).astype(np.int64), 0, bin_count - 1)
    in_range = (arr >= lo) & (arr < hi)
    counts = np.bincount(idx[in_range], minlength=bin_count)
    width = (hi - lo) / bin_count
    density = counts / (emp.count * width)
    return Histogram(
        bin_edges=edges,
        counts=counts,
        density=density,
        below=below,
        above=at_or_above_hi,
        total=emp.count,
    )


def moments(samples, max_order: int) -> np.ndarray:
    """Raw sample moments of orders 1..max_order, compensated summation.

    Uses math.fsum per order, so sixth-moment accumulation over 1e6 samples
    keeps full precision.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    emp = _as_empirical(samples)
    arr = emp.sorted_samples
    out = np.empty(max_order)
    power = np.ones_like(arr)
    for k in range(1, max_order + 1):
        power = power * arr
        out[k - 1] = math.fsum(power) / emp.count
    return out
