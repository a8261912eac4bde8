"""Statistics helpers for experiment summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

CONFIDENCE = 0.95


def wilson_interval(successes: int, count: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """Return the Wilson score interval of a binomial proportion.

    Parameters:
        successes: Number of successes.
        count: Number of trials.
        confidence: Confidence level.

    Returns:
        The interval; (0, 1) when there are no trials.
    """
    if count == 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + confidence / 2))
    p = successes / count
    scale = 1 + z**2 / count
    center = (p + z**2 / (2 * count)) / scale
    half = z / scale * math.sqrt(p * (1 - p) / count + z**2 / (4 * count**2))
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


@dataclass(frozen=True)
class FieldStats:
    """Summary of a numeric field over trials; non-finite values are left out."""

    count: int
    mean: float
    variance: float
    min: float  # noqa: A003
    max: float  # noqa: A003
    q05: float
    median: float
    q95: float

    @property
    def coefficient_of_variation(self) -> float:
        """Standard deviation over mean."""
        return math.sqrt(self.variance) / self.mean if self.mean else math.nan


def describe(values: list[float] | np.ndarray) -> FieldStats:
    """Summarize numeric values.

    The variance is the unbiased sample variance, and 0 for a single value.

    Parameters:
        values: The values.

    Returns:
        The summary; NaN fields when no finite value is given.
    """
    data = np.asarray(values, dtype=float)
    data = data[np.isfinite(data)]
    if not data.size:
        return FieldStats(0, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan)
    q05, median, q95 = np.quantile(data, [0.05, 0.5, 0.95])
    return FieldStats(
        count=int(data.size),
        mean=float(data.mean()),
        variance=float(data.var(ddof=1)) if data.size > 1 else 0.0,
        min=float(data.min()),
        max=float(data.max()),
        q05=float(q05),
        median=float(median),
        q95=float(q95),
    )


@dataclass(frozen=True)
class Frequency:
    """Empirical frequency of a boolean field with its Wilson interval."""

    successes: int
    count: int
    low: float
    high: float

    @property
    def value(self) -> float:
        """The frequency, NaN without trials."""
        return self.successes / self.count if self.count else math.nan

    def overlaps(self, other: Frequency) -> bool:
        """Tell whether two intervals intersect.

        Parameters:
            other: Another frequency.

        Returns:
            True if they intersect.
        """
        return self.low <= other.high and other.low <= self.high


def frequency(flags: list[bool]) -> Frequency:
    """Count true flags and attach the Wilson interval.

    Parameters:
        flags: The flags.

    Returns:
        The frequency.
    """
    successes = sum(bool(flag) for flag in flags)
    low, high = wilson_interval(successes, len(flags))
    return Frequency(successes, len(flags), low, high)
