"""Command-line interface: ``trimrank {simulate,rank,detect,sweep,path}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import secrets
import sys
from pathlib import Path

from . import __version__
from .csvio import ingest_csv, read_truth, truth_sidecar, write_csv, write_truth
from .errors import TrimRankError
from .evaluation import METHODS, SweepSpec, run_sweep, score_detection
from .hodge import connected_components, least_squares, trimmed_least_squares
from .huber_lasso import lasso_path, lasso_select
from .ilts import IltsConfig, adaptive_ilts, adjacent_pair_correction, ilts_with_k
from .report import (SCHEMA_VERSION, comparison_matrix, format_matrix, outlier_entries,
                     ranking_entries)
from .simulate import SimulationSpec, generate

logger = logging.getLogger("trimrank")


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _percent_list(text):
    # accepts 0.05 or 5%
    vals = []
    for x in text.split(","):
        x = x.strip()
        if not x:
            continue
        vals.append(float(x[:-1]) / 100 if x.endswith("%") else float(x))
    return tuple(vals)


def _seed(args):
    if args.seed is None:
        args.seed = secrets.randbits(63)
        logger.warning("no --seed given; using generated seed %d", args.seed)
    return args.seed


def _emit(text, out):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_simulate(args):
    seed = _seed(args)
    sim = generate(SimulationSpec(args.n_items, args.sn, args.op, seed))
    write_csv(sim.dataset, args.out)
    write_truth(sim.true_outliers, truth_sidecar(args.out))
    logger.info("wrote %d records (%d reversed) to %s", sim.dataset.n_records,
                sim.true_outliers.outlier_count(), args.out)
    return 0


def _components_note(dataset, mask=None):
    comps = connected_components(dataset, mask)
    if len(comps) > 1:
        return {"components": [[str(dataset.label(k)) for k in c] for c in comps],
                "note": "order across components is undefined"}
    return None


def cmd_rank(args):
    ds = ingest_csv(args.input)
    scores = least_squares(ds)
    ranking = ranking_entries(ds, scores)
    if args.format == "json":
        payload = {"schema_version": SCHEMA_VERSION, "command": "rank",
                   "n_items": ds.n_items, "n_records": ds.n_records, "ranking": ranking}
        note = _components_note(ds)
        if note:
            payload["disconnected"] = note
        _emit(json.dumps(payload, indent=2), args.out)
    elif args.format == "csv":
        _emit(_rows_csv(["rank", "item", "score"],
                        [[r["rank"], r["label"], f"{r['score']:.10g}"] for r in ranking]),
              args.out)
    else:
        width = max(len(r["label"]) for r in ranking)
        _emit("\n".join(f"{r['rank']:>4}  {r['label']:<{width}}  {r['score']:+.6f}"
                        for r in ranking), args.out)
    return 0


def _config(args):
    return IltsConfig(beta1=args.beta1, beta2=args.beta2, max_iter=args.max_iter,
                      growth_rule="paper_floor" if args.growth == "paper" else "strict_progress")


def _validate_detect(args, ds):
    if args.method == "ilts-k" and args.k is None:
        raise ValueError("--method ilts-k requires --k")
    if args.k is not None and not 0 <= args.k < ds.n_records:
        raise ValueError(f"--k must lie in [0, {ds.n_records}), got {args.k}")


def cmd_detect(args):
    config = _config(args)
    ds = ingest_csv(args.input)
    _validate_detect(args, ds)
    correction = args.correction if args.correction is not None else args.method == "ilts"
    info = {"method": args.method, "correction": correction}
    if args.method == "ilts":
        sol = adaptive_ilts(ds, config)
        if correction:
            sol = adjacent_pair_correction(ds, sol)
        scores, mask = sol.scores, sol.mask
        info.update(estimated_k=sol.estimated_k, iterations=sol.iterations,
                    converged=sol.converged, warnings=list(sol.warnings))
    elif args.method == "ilts-k":
        sol = ilts_with_k(ds, args.k, config)
        if correction:
            sol = adjacent_pair_correction(ds, sol)
        scores, mask = sol.scores, sol.mask
        info.update(estimated_k=sol.mask.outlier_count(), iterations=sol.iterations,
                    converged=sol.converged, warnings=list(sol.warnings))
    else:
        k = args.k
        if k is None:
            # same protocol as on real data: iLTS chooses how many to take
            est = adjacent_pair_correction(ds, adaptive_ilts(ds, config))
            k = est.mask.outlier_count()
            info["k_source"] = "adaptive iLTS estimate"
        path = lasso_path(ds, args.grid_size)
        mask = lasso_select(path, k, ds.n_records)
        scores, _ = trimmed_least_squares(ds, mask)
        info.update(estimated_k=k, iterations=len(path.lambdas), converged=True,
                    warnings=[])
    ls_scores = least_squares(ds)
    order = ls_scores.ranking()
    counts, flagged = comparison_matrix(ds, mask)
    truth_metrics = None
    if args.truth:
        truth = read_truth(args.truth, ds.n_records)
        truth_metrics = score_detection(mask, truth).as_dict()
    outliers = outlier_entries(ds, mask)
    ranking = ranking_entries(ds, scores)
    if args.format == "json":
        payload = {
            "schema_version": SCHEMA_VERSION, "command": "detect",
            "n_items": ds.n_items, "n_records": ds.n_records, **info,
            "outlier_count": mask.outlier_count(),
            "outlier_percentage": mask.outlier_count() / ds.n_records,
            "ranking": ranking,
            "outliers": outliers,
            "matrix": {
                "order_by": "least_squares",
                "items": [str(ds.label(int(k))) for k in order],
                "counts": counts[order][:, order].tolist(),
                "outliers": flagged[order][:, order].tolist(),
            },
        }
        if truth_metrics:
            payload["metrics"] = truth_metrics
        note = _components_note(ds, mask)
        if note:
            payload["disconnected"] = note
        _emit(json.dumps(payload, indent=2), args.out)
    elif args.format == "csv":
        _emit(_rows_csv(["record", "rater", "item_i", "item_j", "preferred", "over"],
                        [[o["record"], o["rater"], o["item_i"], o["item_j"], o["preferred"],
                          o["over"]] for o in outliers]), args.out)
    else:
        lines = [f"method: {args.method}   correction: {correction}",
                 f"records: {ds.n_records}   outliers: {mask.outlier_count()} "
                 f"({100 * mask.outlier_count() / ds.n_records:.2f}%)   "
                 f"estimated_k: {info['estimated_k']}   iterations: {info['iterations']}"]
        if truth_metrics:
            lines.append("precision {precision:.3f}  recall {recall:.3f}  f1 {f1:.3f}"
                         .format(**truth_metrics))
        for w in info.get("warnings", []):
            lines.append(f"warning: {w}")
        lines.append("")
        lines.append("ranking:")
        lines.extend(f"{r['rank']:>4}  {r['label']}  {r['score']:+.6f}" for r in ranking)
        lines.append("")
        lines.append("paired comparison matrix (row preferred over column; "
                     "a*o = o of a flagged, a* = all flagged):")
        lines.append(format_matrix(ds, order, counts, flagged))
        _emit("\n".join(lines), args.out)
    return 0


def cmd_sweep(args):
    seed = _seed(args)
    threads = 1 if args.single_thread_timing else args.threads
    spec = SweepSpec(sn_values=args.sn, op_values=args.op, repeats=args.repeats,
                     base_seed=seed, n_items=args.n_items, grid_size=args.grid_size,
                     config=_config(args), correction=args.correction)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    report = run_sweep(spec, methods, threads=threads)
    if args.format == "json":
        _emit(report.to_json(), args.out)
    elif args.format == "csv":
        _emit(report.to_csv(), args.out)
    else:
        _emit(report.to_text(), args.out)
    if args.raw_csv:
        Path(args.raw_csv).write_text(report.to_csv(), encoding="utf-8")
    failures = sum(c.failures for c in report.cells)
    if failures:
        logger.warning("%d runs failed and were excluded from the aggregates", failures)
    return 0


def cmd_path(args):
    ds = ingest_csv(args.input)
    path = lasso_path(ds, args.grid_size)
    if args.format == "json":
        payload = {"schema_version": SCHEMA_VERSION, "command": "path",
                   "lambdas": path.lambdas.tolist(),
                   "activation_order": list(path.activation_order),
                   "activation_lambda": {str(k): v for k, v in path.activation_lambda.items()},
                   "monotonicity_violations": path.monotonicity_violations}
        _emit(json.dumps(payload, indent=2), args.out)
    else:
        rows = [[pos + 1, k, ds.raters[k], ds.label(int(ds.item_i[k])),
                 ds.label(int(ds.item_j[k])), f"{path.activation_lambda[k]:.6g}"]
                for pos, k in enumerate(path.activation_order)]
        _emit(_rows_csv(["position", "record", "rater", "item_i", "item_j", "lambda"], rows),
              args.out)
    return 0


def _add_ilts_flags(p):
    p.add_argument("--beta1", type=float, default=0.75)
    p.add_argument("--beta2", type=float, default=1.03)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--growth", choices=("paper", "strict"), default="strict",
                   help="under-estimate growth rule (default: strict)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trimrank", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated comparison CSV and truth sidecar")
    p.add_argument("--n-items", type=int, default=16)
    p.add_argument("--sn", type=int, required=True, help="number of comparisons")
    p.add_argument("--op", type=float, default=0.0, help="outlier fraction in [0, 1]")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rank", help="plain least squares ranking")
    p.add_argument("input")
    p.add_argument("--format", choices=("json", "table", "csv"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("detect", help="detect outlier comparisons")
    p.add_argument("input")
    p.add_argument("--method", choices=("ilts", "ilts-k", "lasso"), default="ilts")
    p.add_argument("--k", type=int)
    _add_ilts_flags(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--no-correction", dest="correction", action="store_false", default=None)
    g.add_argument("--correction", dest="correction", action="store_true")
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--truth", help="truth CSV (record_index,is_outlier) to score against")
    p.add_argument("--format", choices=("json", "table", "csv"), default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="simulation sweep over SN x OP")
    p.add_argument("--sn", type=_int_list, default=(1000, 2000, 3000, 4000, 5000))
    p.add_argument("--op", type=_percent_list,
                   default=tuple(round(0.05 * k, 2) for k in range(1, 11)))
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-items", type=int, default=16)
    p.add_argument("--methods", default="ilts_adaptive",
                   help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--threads", type=int, help="worker processes (default: TRIMRANK_THREADS "
                   "or core count)")
    p.add_argument("--single-thread-timing", action="store_true",
                   help="run sequentially so per-method timings are comparable")
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--no-correction", dest="correction", action="store_false", default=True)
    _add_ilts_flags(p)
    p.add_argument("--format", choices=("json", "table", "csv"), default="table")
    p.add_argument("--raw-csv", help="also write per-run metrics to this CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("path", help="Huber-LASSO activation order")
    p.add_argument("input")
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_path)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), stream=sys.stderr,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (TrimRankError, ValueError, OSError) as exc:
        print(f"trimrank: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
