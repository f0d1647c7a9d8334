"""Report assembly shared by the CLI commands."""
from __future__ import annotations

import numpy as np

from .model import ComparisonDataset, OutlierMask, ScoreVector

SCHEMA_VERSION = 1


def comparison_matrix(dataset: ComparisonDataset, mask: OutlierMask | None = None):
    """Counts ``a[i, j]`` of records preferring ``i`` over ``j``, and how many are outliers."""
    n = dataset.n_items
    winner = np.where(dataset.y > 0, dataset.item_i, dataset.item_j)
    loser = np.where(dataset.y > 0, dataset.item_j, dataset.item_i)
    flat = winner * n + loser
    counts = np.bincount(flat, minlength=n * n).reshape(n, n)
    if mask is None:
        flagged = np.zeros_like(counts)
    else:
        flagged = np.bincount(flat[~mask.keep], minlength=n * n).reshape(n, n)
    return counts, flagged


def format_matrix(dataset, order, counts, flagged) -> str:
    """Aligned text; ``a*o`` marks a cell whose ``a`` records include ``o`` outliers."""
    labels = [str(dataset.label(int(k))) for k in order]
    rows = [["item"] + labels]
    for i in order:
        row = [str(dataset.label(int(i)))]
        for j in order:
            a, o = int(counts[i, j]), int(flagged[i, j])
            row.append(str(a) if o == 0 else (f"{a}*" if o == a else f"{a}*{o}"))
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows)


def ranking_entries(dataset: ComparisonDataset, scores: ScoreVector):
    return [{"rank": pos + 1, "item": int(k), "label": str(dataset.label(int(k))),
             "score": float(scores.scores[k])}
            for pos, k in enumerate(scores.ranking())]


def outlier_entries(dataset: ComparisonDataset, mask: OutlierMask):
    out = []
    for k in mask.outliers():
        i, j, y = int(dataset.item_i[k]), int(dataset.item_j[k]), dataset.y[k]
        win, lose = (i, j) if y > 0 else (j, i)
        out.append({"record": int(k), "rater": str(dataset.raters[k]),
                    "item_i": str(dataset.label(i)), "item_j": str(dataset.label(j)),
                    "preferred": str(dataset.label(win)), "over": str(dataset.label(lose))})
    return out
