"""Domain types for pairwise-comparison ranking.

A dataset stores each comparison once, with a direction: ``y = +1`` means
``item_i`` was preferred over ``item_j``.  Internally the records are kept as
parallel read-only numpy arrays so the solvers can vectorize; the
``ComparisonRecord`` view exists for callers that want one row at a time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import StructuralError


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ComparisonRecord:
    """One rater's preference between two items."""

    rater: Hashable
    item_i: int
    item_j: int
    y: int
    weight: float = 1.0

    def __post_init__(self):
        if self.item_i == self.item_j:
            raise ValueError("a comparison needs two distinct items")
        if self.y not in (1, -1):
            raise ValueError(f"y must be +1 or -1, got {self.y!r}")
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight!r}")

    def flipped(self) -> "ComparisonRecord":
        return ComparisonRecord(self.rater, self.item_j, self.item_i, -self.y, self.weight)


@dataclass(frozen=True, eq=False)
class ComparisonDataset:
    n_items: int
    item_i: np.ndarray
    item_j: np.ndarray
    y: np.ndarray
    weight: np.ndarray
    raters: tuple = ()
    labels: tuple | None = None

    def __post_init__(self):
        n = int(self.n_items)
        if n < 1:
            raise ValueError("n_items must be positive")
        object.__setattr__(self, "n_items", n)
        ii = _frozen(self.item_i, np.intp)
        jj = _frozen(self.item_j, np.intp)
        m = ii.shape[0]
        yy = _frozen(self.y, np.float64)
        w = _frozen(np.ones(m) if self.weight is None else self.weight, np.float64)
        if not (ii.ndim == jj.ndim == yy.ndim == w.ndim == 1) or not (
            jj.shape[0] == yy.shape[0] == w.shape[0] == m
        ):
            raise StructuralError("record arrays must be 1-d and of equal length")
        if m and (min(ii.min(), jj.min()) < 0 or max(ii.max(), jj.max()) >= n):
            raise StructuralError(f"item index outside [0, {n})")
        if np.any(ii == jj):
            raise ValueError("a comparison needs two distinct items")
        if not np.all(np.abs(yy) == 1):
            raise ValueError("y must be +1 or -1")
        if not np.all(w > 0):
            raise ValueError("weights must be positive")
        raters = tuple(self.raters) if len(self.raters) else tuple(range(m))
        if len(raters) != m:
            raise StructuralError("one rater id per record is required")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != n:
                raise StructuralError("one label per item is required")
            object.__setattr__(self, "labels", labels)
        for name, value in (("item_i", ii), ("item_j", jj), ("y", yy), ("weight", w)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "raters", raters)

    @classmethod
    def from_records(cls, n_items: int, records: Iterable[ComparisonRecord],
                     labels: Sequence | None = None) -> "ComparisonDataset":
        records = list(records)
        return cls(
            n_items,
            [r.item_i for r in records],
            [r.item_j for r in records],
            [r.y for r in records],
            [r.weight for r in records],
            raters=tuple(r.rater for r in records),
            labels=labels,
        )

    def __len__(self):
        return self.item_i.shape[0]

    @property
    def n_records(self) -> int:
        return self.item_i.shape[0]

    @property
    def records(self) -> tuple[ComparisonRecord, ...]:
        return tuple(self.record(k) for k in range(self.n_records))

    def record(self, k: int) -> ComparisonRecord:
        return ComparisonRecord(self.raters[k], int(self.item_i[k]), int(self.item_j[k]),
                                int(self.y[k]), float(self.weight[k]))

    def label(self, item: int):
        return item if self.labels is None else self.labels[item]

    def with_y(self, y) -> "ComparisonDataset":
        return ComparisonDataset(self.n_items, self.item_i, self.item_j, y, self.weight,
                                 self.raters, self.labels)

    def __eq__(self, other):
        if not isinstance(other, ComparisonDataset):
            return NotImplemented
        return (
            self.n_items == other.n_items
            and np.array_equal(self.item_i, other.item_i)
            and np.array_equal(self.item_j, other.item_j)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.weight, other.weight)
            and self.raters == other.raters
        )

    __hash__ = None


class DatasetBuilder:
    """Append-only collector; ``seal()`` produces the immutable dataset."""

    def __init__(self, n_items: int, labels: Sequence | None = None):
        self.n_items = n_items
        self.labels = labels
        self._records: list[ComparisonRecord] = []

    def add(self, rater, item_i, item_j, y, weight=1.0) -> int:
        self._records.append(ComparisonRecord(rater, item_i, item_j, y, weight))
        return len(self._records) - 1

    def seal(self) -> ComparisonDataset:
        return ComparisonDataset.from_records(self.n_items, self._records, self.labels)


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Global scores, gauged so each connected block sums to zero."""

    scores: np.ndarray

    def __post_init__(self):
        s = _frozen(self.scores, np.float64)
        if s.ndim != 1:
            raise StructuralError("scores must be a vector")
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        if abs(s.sum()) > 1e-9 * max(len(s), 1):
            raise ValueError(f"scores violate the sum-zero gauge (sum={s.sum():.3e})")
        object.__setattr__(self, "scores", s)

    @classmethod
    def gauged(cls, values) -> "ScoreVector":
        v = np.asarray(values, dtype=np.float64)
        return cls(v - v.mean())

    def __len__(self):
        return len(self.scores)

    def __getitem__(self, k):
        return self.scores[k]

    def ranking(self) -> np.ndarray:
        """Items from best to worst; ties broken by ascending item index."""
        return np.lexsort((np.arange(len(self.scores)), -self.scores))


@dataclass(frozen=True, eq=False)
class OutlierMask:
    """``keep[k]`` is False when record ``k`` is flagged as an outlier."""

    keep: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "keep", _frozen(self.keep, bool))

    @classmethod
    def all_keep(cls, n_records: int) -> "OutlierMask":
        return cls(np.ones(n_records, dtype=bool))

    @classmethod
    def from_outliers(cls, n_records: int, outliers) -> "OutlierMask":
        keep = np.ones(n_records, dtype=bool)
        keep[np.asarray(list(outliers), dtype=np.intp)] = False
        return cls(keep)

    def __len__(self):
        return len(self.keep)

    def outlier_count(self) -> int:
        return int(len(self.keep) - np.count_nonzero(self.keep))

    def outliers(self) -> np.ndarray:
        return np.flatnonzero(~self.keep)

    def key(self) -> bytes:
        return np.packbits(self.keep).tobytes()

    def __eq__(self, other):
        if not isinstance(other, OutlierMask):
            return NotImplemented
        return np.array_equal(self.keep, other.keep)

    __hash__ = None


def residuals(dataset: ComparisonDataset, scores) -> np.ndarray:
    """Vector of ``s_i - s_j - y`` over all records."""
    s = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    if s.shape != (dataset.n_items,):
        raise StructuralError(f"expected {dataset.n_items} scores, got {s.shape}")
    return s[dataset.item_i] - s[dataset.item_j] - dataset.y


def residual(record: ComparisonRecord, scores) -> float:
    s = getattr(scores, "scores", scores)
    n = len(s)
    if not (0 <= record.item_i < n and 0 <= record.item_j < n):
        raise StructuralError(f"record ({record.item_i}, {record.item_j}) outside {n} items")
    return float(s[record.item_i] - s[record.item_j] - record.y)


def mismatch_count(dataset: ComparisonDataset, scores) -> int:
    """Number of records whose direction disagrees with the score order.

    A tie ``s_i == s_j`` agrees with neither direction and counts as a mismatch.
    """
    s = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    if s.shape != (dataset.n_items,):
        raise StructuralError(f"expected {dataset.n_items} scores, got {s.shape}")
    d = s[dataset.item_i] - s[dataset.item_j]
    agree = np.sign(d) == dataset.y
    return int(dataset.n_records - np.count_nonzero(agree))


def trimmed_objective(dataset: ComparisonDataset, scores, mask: OutlierMask) -> float:
    r = residuals(dataset, scores)
    keep = mask.keep
    return float(np.sum(dataset.weight[keep] * r[keep] ** 2))


@dataclass(frozen=True, eq=False)
class TrimmedSolution:
    scores: ScoreVector
    mask: OutlierMask
    objective: float
    iterations: int
    estimated_k: int = 0
    converged: bool = True
    objective_history: tuple = ()
    under_k_history: tuple = ()
    warnings: tuple = ()

    def recompute_objective(self, dataset: ComparisonDataset) -> float:
        return trimmed_objective(dataset, self.scores, self.mask)


@dataclass(frozen=True)
class EvalMetrics:
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    precision: float = field(init=False)
    recall: float = field(init=False)
    f1: float = field(init=False)

    def __post_init__(self):
        tp, fp, fn = self.true_positives, self.false_positives, self.false_negatives
        if min(tp, fp, fn, self.true_negatives) < 0:
            raise ValueError("confusion counts must be non-negative")
        precision = tp / (tp + fp) if tp + fp > 0 else 1.0
        recall = tp / (tp + fn) if tp + fn > 0 else 1.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        object.__setattr__(self, "precision", precision)
        object.__setattr__(self, "recall", recall)
        object.__setattr__(self, "f1", f1)

    def as_dict(self) -> dict:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "true_negatives": self.true_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
