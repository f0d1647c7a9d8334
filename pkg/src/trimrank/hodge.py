"""Graph-Laplacian least squares for global scores.

Scores solve ``L s = b`` where ``L = D - A`` is the Laplacian of the kept
comparison graph (edge weights summed over raters) and ``b`` is the
divergence of the comparison flow.  ``L`` is singular; every connected
component is gauged to zero mean.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import SolverError, StructuralError
from .model import ComparisonDataset, OutlierMask, ScoreVector

logger = logging.getLogger(__name__)

DENSE_MAX_ITEMS = 512
CHOLESKY_MAX_ITEMS = 64
CG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LaplacianSystem:
    laplacian: np.ndarray | sp.csr_matrix
    divergence: np.ndarray
    kept_edges: int
    labels: np.ndarray  # component id per item

    @property
    def n_items(self) -> int:
        return self.divergence.shape[0]

    @property
    def n_components(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def dense(self) -> np.ndarray:
        L = self.laplacian
        return L.toarray() if sp.issparse(L) else np.asarray(L)


def _keep_array(dataset: ComparisonDataset, mask) -> np.ndarray:
    if mask is None:
        return np.ones(dataset.n_records, dtype=bool)
    keep = np.asarray(getattr(mask, "keep", mask), dtype=bool)
    if keep.shape != (dataset.n_records,):
        raise StructuralError(
            f"mask has length {keep.shape[0]}, dataset has {dataset.n_records} records")
    return keep


def assemble(dataset: ComparisonDataset, mask: OutlierMask | None = None) -> LaplacianSystem:
    """Build ``L`` and ``b`` from the records kept by ``mask``."""
    keep = _keep_array(dataset, mask)
    n = dataset.n_items
    ii, jj = dataset.item_i[keep], dataset.item_j[keep]
    w = dataset.weight[keep]
    wy = w * dataset.y[keep]
    b = np.bincount(ii, wy, minlength=n) - np.bincount(jj, wy, minlength=n)
    deg = np.bincount(ii, w, minlength=n) + np.bincount(jj, w, minlength=n)
    if n <= DENSE_MAX_ITEMS:
        A = np.bincount(ii * n + jj, w, minlength=n * n).reshape(n, n)
        A = A + A.T
        L = np.diag(deg) - A
        adjacency = A
    else:
        rows = np.concatenate([ii, jj])
        cols = np.concatenate([jj, ii])
        adjacency = sp.csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))
        L = (sp.diags(deg) - adjacency).tocsr()
    _, labels = _cc(sp.csr_matrix(adjacency), directed=False)
    return LaplacianSystem(L, b, int(keep.sum()), labels)


def _project(v, labels, counts):
    return v - (np.bincount(labels, v, minlength=len(counts)) / counts)[labels]


def _solve_cholesky(L, b, labels):
    s = np.zeros_like(b)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        m = idx.size
        if m == 1:
            continue
        block = L[np.ix_(idx, idx)] + 1.0 / m
        s[idx] = scipy.linalg.cho_solve(scipy.linalg.cho_factor(block), b[idx])
    return s


def _solve_cg(L, b, labels):
    # Conjugate gradient restricted to the sum-zero subspace of each component.
    n = b.shape[0]
    counts = np.bincount(labels).astype(np.float64)
    b = _project(b, labels, counts)
    bnorm = np.linalg.norm(b)
    s = np.zeros(n)
    if bnorm == 0:
        return s
    r = b.copy()
    p = r.copy()
    rr = r @ r
    for _ in range(10 * n):
        Lp = _project(L @ p, labels, counts)
        alpha = rr / (p @ Lp)
        s += alpha * p
        r -= alpha * Lp
        rr_new = r @ r
        if np.sqrt(rr_new) <= CG_TOL * bnorm:
            return _project(s, labels, counts)
        p = r + (rr_new / rr) * p
        rr = rr_new
    res = np.linalg.norm(L @ s - b) / bnorm
    raise SolverError(f"conjugate gradient did not converge in {10 * n} iterations", res)


def solve_scores(system: LaplacianSystem) -> ScoreVector:
    """Minimum-norm solution of ``L s = b``, each component gauged to mean zero."""
    L, b, labels = system.laplacian, system.divergence, system.labels
    n = b.shape[0]
    if n <= CHOLESKY_MAX_ITEMS:
        s = _solve_cholesky(np.asarray(L), b, labels)
    else:
        s = _solve_cg(L, b, labels)
    # cancel rounding drift in the gauge
    counts = np.bincount(labels).astype(np.float64)
    s = _project(s, labels, counts)
    res = float(np.linalg.norm(L @ s - b))
    if res > 1e-8 * (1 + np.linalg.norm(b)):
        raise SolverError(f"normal-equation residual {res:.3e} above tolerance", res)
    return ScoreVector(s)


def connected_components(dataset: ComparisonDataset, mask: OutlierMask | None = None):
    """Partition of the items induced by kept edges, as sorted lists."""
    keep = _keep_array(dataset, mask)
    n = dataset.n_items
    ii, jj = dataset.item_i[keep], dataset.item_j[keep]
    adj = sp.csr_matrix((np.ones(ii.size), (ii, jj)), shape=(n, n))
    _, labels = _cc(adj, directed=False)
    groups: dict[int, list[int]] = {}
    for item, c in enumerate(labels):
        groups.setdefault(int(c), []).append(item)
    return sorted(groups.values(), key=lambda g: g[0])


def fit_mask(dataset: ComparisonDataset, mask: OutlierMask | None = None):
    """Solve on the kept records; returns ``(scores, objective, n_components)``."""
    keep = _keep_array(dataset, mask)
    system = assemble(dataset, keep)
    scores = solve_scores(system)
    r = scores.scores[dataset.item_i] - scores.scores[dataset.item_j] - dataset.y
    objective = float(np.sum(dataset.weight[keep] * r[keep] ** 2))
    return scores, objective, system.n_components


def trimmed_least_squares(dataset: ComparisonDataset, mask: OutlierMask | None = None):
    """Least squares on the records kept by ``mask``; returns ``(scores, objective)``."""
    scores, objective, _ = fit_mask(dataset, mask)
    return scores, objective


def least_squares(dataset: ComparisonDataset) -> ScoreVector:
    return trimmed_least_squares(dataset)[0]
