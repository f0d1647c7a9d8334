"""Detection metrics and simulation sweeps over (SN, OP) grids.

Seeds: cell ``c`` (row-major over ``sn_values`` x ``op_values``) and repeat
``r`` use ``base_seed ^ r ^ (c << 32)``, reduced to 64 bits.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError, TrimRankError
from .huber_lasso import lasso_path, lasso_select
from .ilts import IltsConfig, adaptive_ilts, adjacent_pair_correction, ilts_with_k
from .model import EvalMetrics, OutlierMask
from .simulate import SimulationSpec, generate

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
METHODS = ("ilts_adaptive", "ilts_fixed_k", "lasso")
METRICS = ("precision", "recall", "f1")
_U64 = (1 << 64) - 1


def score_detection(predicted: OutlierMask, truth: OutlierMask) -> EvalMetrics:
    """Confusion counts with "outlier" as the positive class."""
    if len(predicted) != len(truth):
        raise ValueError(f"mask lengths differ: {len(predicted)} vs {len(truth)}")
    p, t = ~predicted.keep, ~truth.keep
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(len(p) - tp - fp - fn)
    return EvalMetrics(tp, fp, fn, tn)


def symmetric_difference(a: OutlierMask, b: OutlierMask) -> int:
    if len(a) != len(b):
        raise StructuralError("mask lengths differ")
    return int(np.count_nonzero(a.keep != b.keep))


def derive_seed(base_seed: int, cell_index: int, repeat: int) -> int:
    return (base_seed ^ repeat ^ (cell_index << 32)) & _U64


def default_threads() -> int:
    env = os.environ.get("TRIMRANK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SweepSpec:
    sn_values: tuple = (1000, 2000, 3000, 4000, 5000)
    op_values: tuple = tuple(round(0.05 * k, 2) for k in range(1, 11))
    repeats: int = 100
    base_seed: int = 0
    n_items: int = 16
    grid_size: int = 100
    config: IltsConfig = field(default_factory=IltsConfig)
    correction: bool = True

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be positive")
        if not self.sn_values or not self.op_values:
            raise ValueError("empty sweep grid")

    def cells(self):
        return [(sn, op) for sn in self.sn_values for op in self.op_values]


def _run_method(method, sim, spec):
    ds = sim.dataset
    on = sim.true_outliers.outlier_count()
    if method == "ilts_adaptive":
        sol = adaptive_ilts(ds, spec.config)
        if spec.correction:
            sol = adjacent_pair_correction(ds, sol)
        return sol.mask, sol.mask.outlier_count()
    if method == "ilts_fixed_k":
        sol = ilts_with_k(ds, on, spec.config)
        return sol.mask, on
    if method == "lasso":
        path = lasso_path(ds, spec.grid_size)
        return lasso_select(path, on, ds.n_records), on
    raise ValueError(f"unknown method {method!r}")


def _run_one(args):
    spec, methods, cell_index, sn, op, repeat = args
    seed = derive_seed(spec.base_seed, cell_index, repeat)
    sim = generate(SimulationSpec(spec.n_items, sn, op, seed))
    out = {}
    for method in methods:
        t0 = time.perf_counter()
        try:
            mask, k = _run_method(method, sim, spec)
            elapsed = time.perf_counter() - t0
            out[method] = {"metrics": score_detection(mask, sim.true_outliers).as_dict(),
                           "estimated_k": k, "seconds": elapsed, "error": None}
        except (TrimRankError, np.linalg.LinAlgError) as exc:
            out[method] = {"metrics": None, "estimated_k": None,
                           "seconds": time.perf_counter() - t0, "error": str(exc)}
    return {"cell": cell_index, "sn": sn, "op": op, "repeat": repeat, "seed": seed,
            "true_outliers": sim.true_outliers.outlier_count(), "methods": out}


@dataclass
class CellStats:
    sn: int
    op: float
    method: str
    runs: int
    failures: int
    mean: dict
    sd: dict
    mean_estimated_k: float
    seconds: float
    no_outliers: bool

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class SweepReport:
    spec: SweepSpec
    methods: tuple
    cells: list
    runs: list
    threads: int
    wall_seconds: float

    @property
    def timing_comparable(self) -> bool:
        return self.threads == 1

    def cell(self, sn, op, method) -> CellStats:
        for c in self.cells:
            if c.sn == sn and abs(c.op - op) < 1e-12 and c.method == method:
                return c
        raise KeyError((sn, op, method))

    def total_seconds(self, method, sn=None) -> float:
        return sum(c.seconds for c in self.cells
                   if c.method == method and (sn is None or c.sn == sn))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": {
                "sn_values": list(self.spec.sn_values),
                "op_values": list(self.spec.op_values),
                "repeats": self.spec.repeats,
                "base_seed": self.spec.base_seed,
                "n_items": self.spec.n_items,
                "grid_size": self.spec.grid_size,
                "beta1": self.spec.config.beta1,
                "beta2": self.spec.config.beta2,
                "max_iter": self.spec.config.max_iter,
                "growth_rule": self.spec.config.growth_rule,
                "correction": self.spec.correction,
            },
            "methods": list(self.methods),
            "threads": self.threads,
            "timing_comparable": self.timing_comparable,
            "timed": {
                "ilts_adaptive": "adaptive iLTS plus adjacent-pair correction, per run",
                "ilts_fixed_k": "iLTS with the true outlier count, per run",
                "lasso": "full Huber-LASSO path plus top-k selection, per run",
            },
            "cells": [c.as_dict() for c in self.cells],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self, method: str, metric: str = "precision") -> str:
        """Aligned text table: one row per SN, one column per OP, ``mean(sd)``."""
        ops = self.spec.op_values
        header = [f"{metric} (sd)"] + [f"OP={op * 100:g}%" for op in ops]
        rows = [header]
        for sn in self.spec.sn_values:
            row = [f"SN={sn}"]
            for op in ops:
                c = self.cell(sn, op, method)
                if metric == "seconds":
                    row.append(f"{c.seconds:.2f}")
                elif metric == "failures":
                    row.append(str(c.failures))
                else:
                    row.append(f"{c.mean[metric]:.3f}({c.sd[metric]:.3f})")
            rows.append(row)
        widths = [max(len(r[k]) for r in rows) for k in range(len(header))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows]
        lines.insert(1, "-" * len(lines[0]))
        return "\n".join(lines)

    def to_text(self) -> str:
        parts = []
        for method in self.methods:
            for metric in METRICS + ("seconds", "failures"):
                parts.append(f"[{method}] {metric}")
                parts.append(self.to_table(method, metric))
                parts.append("")
        if not self.timing_comparable:
            parts.append(f"timings measured with {self.threads} workers; not comparable")
        return "\n".join(parts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sn", "op", "repeat", "seed", "method", "true_outliers", "estimated_k",
                    "precision", "recall", "f1", "seconds", "error"])
        for run in self.runs:
            for method, res in run["methods"].items():
                m = res["metrics"] or {}
                w.writerow([run["sn"], run["op"], run["repeat"], run["seed"], method,
                            run["true_outliers"], res["estimated_k"], m.get("precision"),
                            m.get("recall"), m.get("f1"), f"{res['seconds']:.6f}",
                            res["error"] or ""])
        return buf.getvalue()


def _aggregate(spec, methods, runs):
    cells = []
    for cell_index, (sn, op) in enumerate(spec.cells()):
        mine = [r for r in runs if r["cell"] == cell_index]
        no_outliers = all(r["true_outliers"] == 0 for r in mine)
        for method in methods:
            results = [r["methods"][method] for r in mine]
            ok = [res for res in results if res["error"] is None]
            mean, sd = {}, {}
            for metric in METRICS:
                vals = np.array([res["metrics"][metric] for res in ok], dtype=float)
                mean[metric] = float(vals.mean()) if vals.size else float("nan")
                sd[metric] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            ks = [res["estimated_k"] for res in ok]
            cells.append(CellStats(
                sn, op, method, len(ok), len(results) - len(ok), mean, sd,
                float(np.mean(ks)) if ks else float("nan"),
                float(sum(res["seconds"] for res in results)), no_outliers))
    return cells


def run_sweep(spec: SweepSpec, methods=("ilts_adaptive",), threads: int | None = None
              ) -> SweepReport:
    """Simulate every (SN, OP) cell ``spec.repeats`` times and score each method.

    ``lasso`` and ``ilts_fixed_k`` are told the true outlier count.
    """
    methods = tuple(methods)
    if not methods:
        raise ValueError("at least one method is required")
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    threads = default_threads() if threads is None else max(1, int(threads))
    tasks = [(spec, methods, c, sn, op, r)
             for c, (sn, op) in enumerate(spec.cells()) for r in range(spec.repeats)]
    t0 = time.perf_counter()
    if threads == 1:
        runs = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (8 * threads))))
    wall = time.perf_counter() - t0
    for run in runs:
        for method, res in run["methods"].items():
            if res["error"] is not None:
                logger.warning("run failed (SN=%s OP=%s repeat=%s %s): %s",
                               run["sn"], run["op"], run["repeat"], method, res["error"])
    return SweepReport(spec, methods, _aggregate(spec, methods, runs), runs, threads, wall)
