"""Iterative least trimmed squares for pairwise rankings.

``ilts_with_k`` alternates a least squares fit on the kept records with a
mask update that drops the ``k`` records of largest (weighted) squared
residual.  ``adaptive_ilts`` does not need ``k``: it starts from an
underestimate of the mismatch count and grows it geometrically until it
meets the mismatch count of the current fit.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError, StructuralError
from .hodge import fit_mask
from .model import (ComparisonDataset, OutlierMask, TrimmedSolution, mismatch_count,
                    residuals)

logger = logging.getLogger(__name__)

SAFETY_CAP = 1000
STALL_TOL = 1e-12
MONOTONE_TOL = 1e-9
# upper bound on alternative tie resolutions tried per iteration
MAX_TIE_ALTERNATIVES = 256

GROWTH_RULES = ("paper_floor", "strict_progress")


@dataclass(frozen=True)
class IltsConfig:
    beta1: float = 0.75
    beta2: float = 1.03
    max_iter: int = 30
    growth_rule: str = "strict_progress"

    def __post_init__(self):
        if not 0 < self.beta1 < 1 < self.beta2:
            raise ValueError(f"need 0 < beta1 < 1 < beta2, got {self.beta1}, {self.beta2}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.growth_rule not in GROWTH_RULES:
            raise ValueError(f"growth_rule must be one of {GROWTH_RULES}")

    def grow(self, under_k: int) -> int:
        g = math.floor(self.beta2 * under_k)
        if self.growth_rule == "strict_progress":
            g = max(g, under_k + 1)
        return g


def _trim_scores(dataset, scores):
    r = residuals(dataset, scores)
    return dataset.weight * r * r


def _trim_order(sq: np.ndarray) -> np.ndarray:
    # descending squared residual, then ascending record index
    return np.lexsort((np.arange(sq.size), -sq))


def update_mask(dataset: ComparisonDataset, scores, k: int) -> OutlierMask:
    """Flag the ``k`` records with the largest weighted squared residual.

    Ties at the threshold go to the lower record index.
    """
    m = dataset.n_records
    if not 0 <= k <= m:
        raise StructuralError(f"k={k} outside [0, {m}]")
    keep = np.ones(m, dtype=bool)
    keep[_trim_order(_trim_scores(dataset, scores))[:k]] = False
    return OutlierMask(keep)


def _tie_alternatives(sq: np.ndarray, k: int, rtol: float = 1e-12):
    """Yield every mask with ``k`` outliers that is optimal for the given residuals.

    Records strictly above the k-th largest value are always outliers; the
    remaining slots are filled from the records tied with it, in
    lexicographic order of index combinations.
    """
    m = sq.size
    if k == 0:
        yield np.ones(m, dtype=bool)
        return
    order = _trim_order(sq)
    tau = sq[order[k - 1]]
    tol = rtol * max(abs(tau), 1.0)
    tied = np.flatnonzero(np.abs(sq - tau) <= tol)
    forced = np.flatnonzero(sq > tau + tol)
    for combo in itertools.islice(itertools.combinations(tied, k - forced.size),
                                  MAX_TIE_ALTERNATIVES):
        keep = np.ones(m, dtype=bool)
        keep[forced] = False
        keep[list(combo)] = False
        yield keep


def _disconnect_warning(n_components):
    return f"kept comparison graph split into {n_components} components"


def ilts_with_k(dataset: ComparisonDataset, k: int, config: IltsConfig | None = None
                ) -> TrimmedSolution:
    """Least trimmed squares with a known number of outliers ``k``.

    From the current scores the next mask is any not yet visited mask that
    trims ``k`` records of maximal residual (several exist when residuals tie
    at the threshold).  An iterate is accepted when the refit lowers the
    objective; the run stops once every admissible mask for the accepted
    scores has been tried without improvement.
    """
    m = dataset.n_records
    if not 0 <= k < max(m, 1):
        raise StructuralError(f"k={k} must lie in [0, {m})")
    mask = OutlierMask.all_keep(m)
    scores, obj, ncomp = fit_mask(dataset, mask)
    visited = {mask.key()}
    history = [obj]
    warnings = set()
    converged = False
    fits = 1
    while fits < SAFETY_CAP:
        sq = _trim_scores(dataset, scores)
        accepted = False
        for cand in _tie_alternatives(sq, k):
            new_mask = OutlierMask(cand)
            if new_mask.key() in visited:
                continue
            visited.add(new_mask.key())
            masked_obj = float(np.sum(sq[cand]))
            new_scores, new_obj, ncomp = fit_mask(dataset, new_mask)
            fits += 1
            if masked_obj > obj + MONOTONE_TOL * (1 + obj) or \
                    new_obj > masked_obj + MONOTONE_TOL * (1 + masked_obj):
                raise InvariantError(
                    f"objective increased: {obj!r} -> {masked_obj!r} -> {new_obj!r}")
            if obj - new_obj > STALL_TOL:
                if ncomp > 1:
                    warnings.add(_disconnect_warning(ncomp))
                scores, mask, obj = new_scores, new_mask, new_obj
                history.append(obj)
                accepted = True
                break
            if fits >= SAFETY_CAP:
                break
        if not accepted:
            converged = fits < SAFETY_CAP
            break
    if mask.outlier_count() != k:
        # k > 0 and nothing improved on the untrimmed fit: still report k outliers
        mask = OutlierMask(next(_tie_alternatives(_trim_scores(dataset, scores), k)))
        scores, obj, _ = fit_mask(dataset, mask)
        history.append(obj)
    return TrimmedSolution(scores, mask, obj, len(history), estimated_k=k,
                           converged=converged, objective_history=tuple(history),
                           warnings=tuple(sorted(warnings)))


def adaptive_ilts(dataset: ComparisonDataset, config: IltsConfig | None = None
                  ) -> TrimmedSolution:
    """Least trimmed squares with the outlier count estimated on the fly."""
    config = config or IltsConfig()
    m = dataset.n_records
    if m == 0:
        raise ValueError("dataset has no records")
    mask = OutlierMask.all_keep(m)
    under_hist: list[int] = []
    obj_hist: list[float] = []
    warnings = set()
    converged = False
    under = 0
    for it in range(1, config.max_iter + 1):
        scores, obj, ncomp = fit_mask(dataset, mask)
        obj_hist.append(obj)
        if ncomp > 1:
            warnings.add(_disconnect_warning(ncomp))
        mismatches = mismatch_count(dataset, scores)
        if it == 1:
            under = math.floor(config.beta1 * mismatches)
        else:
            under = min(config.grow(under), mismatches)
        under_hist.append(under)
        if under == mismatches:
            converged = True
            break
        mask = update_mask(dataset, scores, under)
    estimated_k = mismatches
    iterations = it
    final_mask = update_mask(dataset, scores, estimated_k)
    final_scores, final_obj, ncomp = fit_mask(dataset, final_mask)
    if ncomp > 1:
        warnings.add(_disconnect_warning(ncomp))
    return TrimmedSolution(final_scores, final_mask, final_obj, iterations,
                           estimated_k=estimated_k, converged=converged,
                           objective_history=tuple(obj_hist),
                           under_k_history=tuple(under_hist),
                           warnings=tuple(sorted(warnings)))


def adjacent_pair_correction(dataset: ComparisonDataset, solution: TrimmedSolution
                             ) -> TrimmedSolution:
    """Give the majority the benefit of the doubt between neighbours in the ranking.

    For each pair of items adjacent in the ranking, with ``i`` above ``j``:
    if fewer records prefer ``i`` over ``j`` than ``j`` over ``i``, the
    ``i``-over-``j`` records become outliers and the others are restored.
    Scores are refit once after all pairs are visited.
    """
    order = solution.scores.ranking()
    ii, jj, y = dataset.item_i, dataset.item_j, dataset.y
    winner = np.where(y > 0, ii, jj)
    loser = np.where(y > 0, jj, ii)
    keep = solution.mask.keep.copy()
    changed = False
    for top, below in zip(order[:-1], order[1:]):
        for_top = (winner == top) & (loser == below)
        for_below = (winner == below) & (loser == top)
        if for_top.sum() < for_below.sum():
            if np.any(keep[for_top]) or not np.all(keep[for_below]):
                changed = True
            keep[for_top] = False
            keep[for_below] = True
    if not changed:
        return solution
    mask = OutlierMask(keep)
    scores, obj, ncomp = fit_mask(dataset, mask)
    warnings = set(solution.warnings)
    if ncomp > 1:
        warnings.add(_disconnect_warning(ncomp))
    return TrimmedSolution(scores, mask, obj, solution.iterations,
                           estimated_k=mask.outlier_count(), converged=solution.converged,
                           objective_history=solution.objective_history,
                           under_k_history=solution.under_k_history,
                           warnings=tuple(sorted(warnings)))
