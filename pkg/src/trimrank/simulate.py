"""Synthetic comparison data with direction-reversal outliers.

A uniformly random permutation is the ground truth.  ``sample_count`` item
pairs are drawn uniformly, with replacement, from the unordered pairs and
oriented by the ground truth.  Then exactly ``floor(OP * SN)`` records,
chosen uniformly among the records, have their direction reversed.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence(seed)``,
so a given seed reproduces the same dataset on any platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ComparisonDataset, OutlierMask


@dataclass(frozen=True)
class SimulationSpec:
    n_items: int = 16
    sample_count: int = 1000
    outlier_percentage: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        if not 0.0 <= self.outlier_percentage <= 1.0:
            raise ValueError("outlier_percentage must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def outlier_count(self) -> int:
        # the epsilon absorbs binary rounding, e.g. 0.29 * 100 = 28.999...
        return min(math.floor(self.outlier_percentage * self.sample_count + 1e-9),
                   self.sample_count)


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    dataset: ComparisonDataset
    ground_truth_order: np.ndarray  # best item first
    true_outliers: OutlierMask

    @property
    def true_scores(self) -> np.ndarray:
        """Scores realizing the ground truth: n-1 for the best item down to 0."""
        n = self.dataset.n_items
        s = np.empty(n)
        s[self.ground_truth_order] = np.arange(n - 1, -1, -1, dtype=float)
        return s


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def generate(spec: SimulationSpec) -> SimulatedDataset:
    n = spec.n_items
    if n < 2:
        raise ValueError("simulation needs at least 2 items")
    rng = rng_for(spec.seed)
    order = rng.permutation(n)
    position = np.empty(n, dtype=np.intp)
    position[order] = np.arange(n)

    rows, cols = np.triu_indices(n, k=1)
    picks = rng.integers(0, rows.size, size=spec.sample_count)
    ii, jj = rows[picks], cols[picks]
    y = np.where(position[ii] < position[jj], 1.0, -1.0)

    on = spec.outlier_count
    flipped = rng.choice(spec.sample_count, size=on, replace=False)
    y[flipped] *= -1
    keep = np.ones(spec.sample_count, dtype=bool)
    keep[flipped] = False

    raters = tuple(f"sim{k}" for k in range(spec.sample_count))
    labels = tuple(str(k) for k in range(n))
    dataset = ComparisonDataset(n, ii, jj, y, None, raters=raters, labels=labels)
    return SimulatedDataset(dataset, order, OutlierMask(keep))
