"""Plug-in mutual information between categorical feature values and binned utilities.

Natural log throughout; zero-count cells contribute nothing; no bias
correction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dimshift.env import ConfigError, OptionStimulus

DEFAULT_NUM_BINS = 2
DEFAULT_LO = 0.0
DEFAULT_HI = 1.0


@dataclass
class ContingencyTable:
    """Joint counts over (feature value, utility bin)."""

    counts: np.ndarray  # shape (num_feature_values, num_bins), nonnegative ints

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, feature_value: int, utility_bin: int) -> None:
        self.counts[feature_value, utility_bin] += 1


def bin_utility(
    u: float,
    num_bins: int = DEFAULT_NUM_BINS,
    lo: float = DEFAULT_LO,
    hi: float = DEFAULT_HI,
) -> int:
    """Clamp to [lo, hi] and bin with uniform widths; the top bin is right-closed."""
    if num_bins < 2:
        raise ConfigError(f"num_bins must be >= 2, got {num_bins}")
    u = min(max(u, lo), hi)
    width = (hi - lo) / num_bins
    return min(int((u - lo) / width), num_bins - 1)


def mutual_information(counts: np.ndarray | ContingencyTable) -> float:
    """I(X;Y) in nats from a joint count table; 0 for an empty table."""
    if isinstance(counts, ContingencyTable):
        counts = counts.counts
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p * np.log(p / (px * py))
    return float(np.where(p > 0, terms, 0.0).sum())


def mi_per_dimension(
    occurrences: Sequence[tuple[OptionStimulus, float]],
    num_dimensions: int,
    values_per_dimension: int,
    num_bins: int = DEFAULT_NUM_BINS,
    lo: float = DEFAULT_LO,
    hi: float = DEFAULT_HI,
) -> np.ndarray:
    """One MI value per dimension over (feature value, binned utility) pairs."""
    counts = np.zeros((num_dimensions, values_per_dimension, num_bins), dtype=int)
    for features, utility in occurrences:
        b = bin_utility(utility, num_bins, lo, hi)
        for d in range(num_dimensions):
            counts[d, features[d], b] += 1
    return np.array([mutual_information(counts[d]) for d in range(num_dimensions)])
