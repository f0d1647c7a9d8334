"""Reading and writing comparison CSV files and their sidecars.

Comparison file: UTF-8, header ``rater,item_i,item_j,choice`` where
``choice`` is ``i`` or ``j`` (the preferred item of the row).  Item labels
are interned to dense indices; the label order can be pinned with a JSON
sidecar ``<file>.labels.json``.  Truth sidecar: ``record_index,is_outlier``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .model import ComparisonDataset, OutlierMask

HEADER = ("rater", "item_i", "item_j", "choice")
TRUTH_HEADER = ("record_index", "is_outlier")


def labels_sidecar(path) -> Path:
    return Path(str(path) + ".labels.json")


def truth_sidecar(path) -> Path:
    return Path(str(path) + ".truth.csv")


def read_labels(path) -> list[str]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    labels = data["labels"] if isinstance(data, dict) else data
    return [str(x) for x in labels]


def write_labels(path, labels) -> None:
    Path(path).write_text(
        json.dumps({"schema_version": 1, "labels": [str(x) for x in labels]}, indent=2) + "\n",
        encoding="utf-8")


def ingest_csv(path, labels=None, use_sidecar: bool = True) -> ComparisonDataset:
    """Parse a comparison file into a dataset.

    With ``labels`` (or a labels sidecar next to the file) item indices follow
    that order; otherwise labels are numbered by first appearance.
    """
    path = Path(path)
    if labels is None and use_sidecar and labels_sidecar(path).exists():
        labels = read_labels(labels_sidecar(path))
    fixed = labels is not None
    index = {str(lab): k for k, lab in enumerate(labels or [])}
    if fixed and len(index) != len(labels):
        raise ValueError("duplicate labels in label map")
    raters, ii, jj, yy = [], [], [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise ParseError(f"expected header {','.join(HEADER)!r}, got {header!r}", 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line)
            rater, a, b, choice = (c.strip() for c in row)
            if a == b:
                raise ParseError(f"item compared with itself: {a!r}", line)
            if choice not in ("i", "j"):
                raise ParseError(f"unknown choice {choice!r} (expected 'i' or 'j')", line)
            for lab in (a, b):
                if lab not in index:
                    if fixed:
                        raise ParseError(f"label {lab!r} not in label map", line)
                    index[lab] = len(index)
            raters.append(rater)
            ii.append(index[a])
            jj.append(index[b])
            yy.append(1.0 if choice == "i" else -1.0)
    if not raters:
        raise ValueError(f"{path}: no comparison records")
    if len(index) < 2:
        raise ValueError(f"{path}: fewer than 2 items")
    ordered = sorted(index, key=index.get)
    return ComparisonDataset(len(ordered), ii, jj, yy, None, raters=tuple(raters),
                             labels=tuple(ordered))


def write_csv(dataset: ComparisonDataset, path, with_labels: bool = True) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for k in range(dataset.n_records):
            w.writerow([dataset.raters[k], dataset.label(int(dataset.item_i[k])),
                        dataset.label(int(dataset.item_j[k])),
                        "i" if dataset.y[k] > 0 else "j"])
    if with_labels:
        write_labels(labels_sidecar(path),
                     [dataset.label(k) for k in range(dataset.n_items)])


def write_truth(mask: OutlierMask, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_HEADER)
        for k, keep in enumerate(mask.keep):
            w.writerow([k, 0 if keep else 1])


def read_truth(path, n_records: int | None = None) -> OutlierMask:
    flags = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRUTH_HEADER:
            raise ParseError(f"expected header {','.join(TRUTH_HEADER)!r}", 1)
        for row in reader:
            if not row:
                continue
            try:
                idx, flag = int(row[0]), int(row[1])
            except (ValueError, IndexError):
                raise ParseError(f"malformed truth row {row!r}", reader.line_num) from None
            if flag not in (0, 1):
                raise ParseError(f"is_outlier must be 0 or 1, got {flag}", reader.line_num)
            flags[idx] = flag
    n = n_records if n_records is not None else len(flags)
    if sorted(flags) != list(range(n)):
        raise ParseError("truth file must list every record index exactly once")
    return OutlierMask(np.array([flags[k] == 0 for k in range(n)], dtype=bool))
