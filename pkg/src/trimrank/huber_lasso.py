"""Huber-LASSO baseline.

Each record gets a sparse correction ``E`` and the problem

    min_{s, E}  sum w/2 (s_i - s_j - y + E)^2 + lam * |E|_1

is solved by alternating updates: soft-thresholding gives ``E`` for fixed
``s``, and a least squares solve gives ``s`` for the resulting pattern of
corrections.  Minimizing out ``E`` leaves the Huber loss on the residuals,
so a record is flagged when its residual exceeds ``lam`` in magnitude.

The regularization path walks ``lam`` down a geometric grid and records
the order in which records first get flagged.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError, StructuralError
from .hodge import assemble, solve_scores
from .model import ComparisonDataset, OutlierMask, ScoreVector, residuals

logger = logging.getLogger(__name__)

MAX_ALTERNATIONS = 500
SCORE_TOL = 1e-8
LAMBDA_FLOOR = 1e-3
NEWTON_RIDGE = 1e-3


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _profiled(r, w, t):
    a = np.abs(r)
    return float(np.sum(w * np.where(a <= t, 0.5 * a * a, t * a - 0.5 * t * t)))


def _gradient(dataset, w_psi):
    n = dataset.n_items
    return (np.bincount(dataset.item_i, w_psi, minlength=n)
            - np.bincount(dataset.item_j, w_psi, minlength=n))


def _fit(dataset, lam, s0, full):
    """Alternate the outlier update and the score update until ``s`` settles.

    The outlier step soft-thresholds the residuals, which fixes which records
    carry a nonzero correction and its sign.  The score step then minimizes
    exactly for that sign pattern (a Newton step on the profiled Huber
    objective).  When the uncorrected records do not connect the graph, a
    small multiple of the full Laplacian is added to the Newton system.
    Steps are damped by backtracking so the objective never rises.
    """
    ii, jj, y, w = dataset.item_i, dataset.item_j, dataset.y, dataset.weight
    t = lam / w
    s = np.asarray(s0, dtype=float).copy()
    gap = np.inf
    for it in range(1, MAX_ALTERNATIONS + 1):
        r = s[ii] - s[jj] - y
        e = -_soft(r, t)
        g = _gradient(dataset, w * (r + e))
        inner = e == 0
        system = assemble(dataset, inner)
        if system.n_components != full.n_components:
            system = _blend(system, full, NEWTON_RIDGE)
        d = -solve_scores(_with_divergence(system, g)).scores
        f0 = _profiled(r, w, t)
        slope = float(g @ d)
        step = 1.0
        for _ in range(40):
            cand = s + step * d
            if _profiled(cand[ii] - cand[jj] - y, w, t) <= f0 + 1e-4 * step * slope + 1e-15 * (1 + f0):
                break
            step *= 0.5
        gap = float(np.max(np.abs(step * d))) if s.size else 0.0
        s = s + step * d
        if gap < SCORE_TOL:
            return s, it
    raise SolverError(
        f"Huber-LASSO alternation did not converge in {MAX_ALTERNATIONS} steps "
        f"(lambda={lam:g}, last gap {gap:.3e})", gap)


def _blend(inner, full, mu):
    # inner + mu * full has the null space of the full graph only
    L = inner.laplacian + mu * full.laplacian
    return type(full)(L, full.divergence, full.kept_edges, full.labels)


def _with_divergence(system, b):
    return type(system)(system.laplacian, b, system.kept_edges, system.labels)


def huber_fit(dataset: ComparisonDataset, lam: float, initial=None):
    """Solve Huber-LASSO at one penalty level.

    Returns ``(scores, flags)`` where ``flags[k]`` is True when record ``k``
    has ``|s_i - s_j - y| > lam`` at the solution.
    """
    if not lam >= 0:
        raise ValueError(f"lambda must be non-negative, got {lam!r}")
    full = assemble(dataset)
    if initial is None:
        initial = solve_scores(full).scores
    s, _ = _fit(dataset, lam, initial, full)
    scores = ScoreVector.gauged(s)
    flags = np.abs(residuals(dataset, scores)) > lam
    return scores, flags


def huber_loss(dataset: ComparisonDataset, scores, lam: float) -> float:
    """Weighted Huber objective ``sum w * rho_{lam/w}(r)``; equals the profiled LASSO objective."""
    r = np.abs(residuals(dataset, scores))
    t = lam / dataset.weight
    rho = np.where(r <= t, 0.5 * r * r, t * r - 0.5 * t * t)
    return float(np.sum(dataset.weight * rho))


@dataclass(frozen=True, eq=False)
class LassoPath:
    lambdas: np.ndarray
    activation_order: tuple
    activation_lambda: dict = field(default_factory=dict)
    final_residuals: np.ndarray | None = None
    scores: tuple = ()
    monotonicity_violations: int = 0
    total_alternations: int = 0

    def __post_init__(self):
        order = self.activation_order
        if len(set(order)) != len(order):
            raise StructuralError("activation order has duplicates")
        if np.any(np.diff(self.lambdas) >= 0):
            raise ValueError("lambda grid must be strictly decreasing")


def lambda_grid(lam_max: float, grid_size: int, floor: float = LAMBDA_FLOOR) -> np.ndarray:
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    lam_max = max(lam_max, floor * (1 + 1e-9))
    return np.geomspace(lam_max, floor, grid_size)


def lasso_path(dataset: ComparisonDataset, grid_size: int = 100,
               keep_scores: bool = False) -> LassoPath:
    """Warm-started Huber-LASSO over a geometric penalty grid."""
    full = assemble(dataset)
    m = dataset.n_records
    s = solve_scores(full).scores
    r0 = np.abs(s[dataset.item_i] - s[dataset.item_j] - dataset.y)
    lambdas = lambda_grid(float(r0.max()) if m else LAMBDA_FLOOR, grid_size)
    active = np.zeros(m, dtype=bool)
    order: list[int] = []
    first_lam: dict[int, float] = {}
    violations = 0
    total = 0
    path_scores = []
    for lam in lambdas:
        s, its = _fit(dataset, lam, s, full)
        total += its
        s = s - s.mean()
        r = np.abs(s[dataset.item_i] - s[dataset.item_j] - dataset.y)
        now = r > lam
        lost = active & ~now
        if lost.any():
            violations += int(lost.sum())
            logger.debug("%d records deactivated at lambda=%g", lost.sum(), lam)
        new = np.flatnonzero(now & ~active)
        if new.size:
            new = new[np.lexsort((new, -r[new]))]
            order.extend(int(k) for k in new)
            first_lam.update((int(k), float(lam)) for k in new)
            active[new] = True
        if keep_scores:
            path_scores.append(ScoreVector.gauged(s))
    return LassoPath(lambdas, tuple(order), first_lam, r, tuple(path_scores),
                     violations, total)


def lasso_select(path: LassoPath, k: int, n_records: int | None = None) -> OutlierMask:
    """Mask the first ``k`` records to activate along the path.

    If fewer than ``k`` ever activate, the rest are taken by descending final
    residual magnitude.
    """
    if n_records is None:
        if path.final_residuals is None:
            raise StructuralError("n_records is required when the path has no residuals")
        n_records = len(path.final_residuals)
    if not 0 <= k <= n_records:
        raise StructuralError(f"k={k} outside [0, {n_records}]")
    chosen = list(path.activation_order[:k])
    if len(chosen) < k:
        taken = set(chosen)
        res = path.final_residuals if path.final_residuals is not None else np.zeros(n_records)
        for idx in np.lexsort((np.arange(n_records), -np.asarray(res))):
            if len(chosen) == k:
                break
            if int(idx) not in taken:
                chosen.append(int(idx))
    return OutlierMask.from_outliers(n_records, chosen)
