"""scikit-learn compatible estimators.

Inputs follow the usual ``fit(X, y)`` shape: ``X`` is an ``(m, 2)`` integer
array of item pairs ``(i, j)`` and ``y`` holds ``+1`` when ``i`` was preferred,
``-1`` otherwise.  ``predict`` returns the preferred direction for new pairs
and ``decision_function`` the score difference ``s_i - s_j``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .hodge import connected_components, least_squares, trimmed_least_squares
from .huber_lasso import lasso_path, lasso_select
from .ilts import IltsConfig, adaptive_ilts, adjacent_pair_correction, ilts_with_k
from .model import ComparisonDataset

__all__ = ["HodgeRank", "LeastTrimmedSquaresRank", "HuberLassoRank", "check_pairs",
           "to_dataset"]


def check_pairs(X, y=None, n_items=None, sample_weight=None):
    """Validate pair arrays; returns ``(X, y, sample_weight, n_items)``."""
    if y is None:
        X = check_array(X, dtype=np.int64)
    else:
        X, y = check_X_y(X, y, dtype=np.int64, y_numeric=True)
        y = np.asarray(y, dtype=np.float64)
        if not np.all(np.abs(y) == 1):
            raise ValueError("y must contain only +1 and -1")
    if X.shape[1] != 2:
        raise ValueError(f"X must have 2 columns (item_i, item_j), got {X.shape[1]}")
    if X.size and X.min() < 0:
        raise ValueError("item indices must be non-negative")
    if np.any(X[:, 0] == X[:, 1]):
        raise ValueError("a pair must contain two distinct items")
    inferred = int(X.max()) + 1 if X.size else 0
    if n_items is None:
        n_items = inferred
    elif inferred > n_items:
        raise ValueError(f"item index {inferred - 1} out of range for n_items={n_items}")
    if sample_weight is not None:
        sample_weight = np.asarray(sample_weight, dtype=np.float64)
        if sample_weight.shape != (X.shape[0],):
            raise ValueError("sample_weight must have one entry per pair")
        if not np.all(sample_weight > 0):
            raise ValueError("sample_weight must be positive")
    return X, y, sample_weight, n_items


def to_dataset(X, y, n_items=None, sample_weight=None) -> ComparisonDataset:
    X, y, w, n = check_pairs(X, y, n_items, sample_weight)
    return ComparisonDataset(n, X[:, 0], X[:, 1], y, w)


class HodgeRank(BaseEstimator):
    """Least squares global ranking from pairwise comparisons.

    Parameters
    ----------
    n_items : int or None
        Number of items; inferred from the largest index in ``X`` if None.

    Attributes
    ----------
    scores_ : ndarray of shape (n_items,)
        Global scores, gauged to zero mean on each connected component.
    ranking_ : ndarray
        Items sorted from best to worst.
    components_ : list of lists
        Connected components of the comparison graph used for the fit.
    """

    def __init__(self, n_items=None):
        self.n_items = n_items

    def _dataset(self, X, y, sample_weight):
        ds = to_dataset(X, y, self.n_items, sample_weight)
        self.n_items_ = ds.n_items
        return ds

    def _set_scores(self, ds, scores, mask=None):
        self.scores_ = np.array(scores.scores)
        self.ranking_ = scores.ranking()
        self.components_ = connected_components(ds, mask)

    def fit(self, X, y, sample_weight=None):
        ds = self._dataset(X, y, sample_weight)
        self._set_scores(ds, least_squares(ds))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "scores_")
        X, _, _, _ = check_pairs(X, n_items=self.n_items_)
        return self.scores_[X[:, 0]] - self.scores_[X[:, 1]]

    def predict(self, X):
        """``+1`` where the first item is ranked higher, else ``-1``."""
        return np.where(self.decision_function(X) > 0, 1, -1)

    def score(self, X, y, sample_weight=None):
        """Weighted fraction of pairs whose direction is predicted correctly."""
        check_is_fitted(self, "scores_")
        X, y, w, _ = check_pairs(X, y, self.n_items_, sample_weight)
        hit = self.predict(X) == y
        return float(np.average(hit, weights=w))

    def transform(self, X):
        """Score of each item in each pair, shape ``(m, 2)``."""
        check_is_fitted(self, "scores_")
        X, _, _, _ = check_pairs(X, n_items=self.n_items_)
        return self.scores_[X]


class LeastTrimmedSquaresRank(HodgeRank):
    """Robust ranking by iterative least trimmed squares.

    With ``n_outliers=None`` the number of outliers is estimated adaptively
    (``beta1``, ``beta2``, ``max_iter``, ``growth_rule``); otherwise exactly
    ``n_outliers`` comparisons are trimmed.

    Attributes
    ----------
    inlier_mask_ : ndarray of bool
        False for comparisons flagged as outliers.
    n_outliers_ : int
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, n_outliers=None, beta1=0.75, beta2=1.03, max_iter=30,
                 growth_rule="strict_progress", correction=None, n_items=None):
        super().__init__(n_items=n_items)
        self.n_outliers = n_outliers
        self.beta1 = beta1
        self.beta2 = beta2
        self.max_iter = max_iter
        self.growth_rule = growth_rule
        self.correction = correction

    def fit(self, X, y, sample_weight=None):
        config = IltsConfig(self.beta1, self.beta2, self.max_iter, self.growth_rule)
        ds = self._dataset(X, y, sample_weight)
        adaptive = self.n_outliers is None
        sol = adaptive_ilts(ds, config) if adaptive else ilts_with_k(ds, self.n_outliers, config)
        correction = adaptive if self.correction is None else self.correction
        if correction:
            sol = adjacent_pair_correction(ds, sol)
        self.solution_ = sol
        self.inlier_mask_ = np.array(sol.mask.keep)
        self.n_outliers_ = sol.mask.outlier_count()
        self.estimated_k_ = sol.estimated_k
        self.n_iter_ = sol.iterations
        self.converged_ = sol.converged
        self.objective_ = sol.objective
        self._set_scores(ds, sol.scores, sol.mask)
        return self

    def fit_outliers(self, X, y, sample_weight=None):
        """Fit and return ``-1`` for outlier comparisons and ``+1`` for inliers."""
        self.fit(X, y, sample_weight)
        return np.where(self.inlier_mask_, 1, -1)


class HuberLassoRank(HodgeRank):
    """Huber-LASSO baseline: trims the first ``n_outliers`` records to activate
    along the regularization path, then refits least squares on the rest."""

    def __init__(self, n_outliers=0, grid_size=100, n_items=None):
        super().__init__(n_items=n_items)
        self.n_outliers = n_outliers
        self.grid_size = grid_size

    def fit(self, X, y, sample_weight=None):
        ds = self._dataset(X, y, sample_weight)
        self.path_ = lasso_path(ds, self.grid_size)
        mask = lasso_select(self.path_, self.n_outliers, ds.n_records)
        scores, _ = trimmed_least_squares(ds, mask)
        self.inlier_mask_ = np.array(mask.keep)
        self.n_outliers_ = mask.outlier_count()
        self._set_scores(ds, scores, mask)
        return self
