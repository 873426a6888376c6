"""Command-line surface for the whole pipeline.

Subcommands mirror the offline/online split plus the evaluation machinery:

    extract    runs -> fusion-graph index directory
    search     query run rows + index -> fused TREC run
    baseline   runs -> fused TREC run via a named aggregation method
    eval       run + qrels (or class labels) -> NDCG@k / N-S report
    correlate  run set -> pairwise ranker-correlation matrix
    select     effectiveness (+ correlations) -> chosen ranker subset
    winners    effectiveness table -> winning number per method
    ttest      two per-query metric files -> significance verdict

Any library failure exits non-zero after printing one JSON line to stderr
with the machine-readable error category. Worker count comes from --workers
or the FUSEGRAPH_THREADS environment variable (default 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import baselines
from .errors import FusionError
from .evaluation import (
    CORRELATIONS,
    SELECTION_STRATEGIES,
    evaluate_runs,
    paired_t_test,
    ranker_correlation,
    select_rankers,
    winning_numbers,
)
from .io import (
    build_collection_index,
    load_config,
    load_runs,
    parse_class_labels,
    parse_correlation_matrix,
    parse_effectiveness_table,
    parse_per_query_metrics,
    parse_qrels,
    parse_ranker_effectiveness,
    parse_run_file,
    rank_sets_from_runs,
    write_correlation_matrix,
    write_per_query_metrics,
    write_run_file,
)
from .normalize import NormalizationParams, normalize_collection
from .retrieval import fuse_query, index_collection, load_index, map_ordered, save_index

DEFAULT_TAG = "FG"


def _workers(args: argparse.Namespace) -> int:
    if getattr(args, "workers", None):
        return max(1, args.workers)
    env = os.environ.get("FUSEGRAPH_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _cmd_extract(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    index = build_collection_index(config)
    params = NormalizationParams(config.depth)
    fg_index = index_collection(
        index,
        config.ranker_names,
        params,
        comparator=config.comparator,
        strict=config.strict,
        workers=_workers(args),
    )
    save_index(args.out, fg_index, index)
    print(f"indexed {len(fg_index.graphs)} items into {args.out}")
    return 0


def _cmd_search(args: argparse.Namespace) -> int:
    fg_index, raw_index = load_index(args.index)
    config = load_config(args.queries)
    query_runs = {
        spec.name: parse_run_file(spec.run, spec.name, spec.polarity, fg_index.params.depth)
        for spec in config.rankers
    }
    rank_sets = rank_sets_from_runs(query_runs, tuple(config.ranker_names), strict=True)
    normalized = normalize_collection(raw_index, fg_index.ranker_names, fg_index.params)
    exclude_self = args.exclude_self or config.exclude_self

    def run_one(qid):
        return qid, fuse_query(
            rank_sets[qid],
            fg_index,
            raw_index,
            normalized_index=normalized,
            exclude_self=exclude_self,
            use_scope=args.scope,
        )

    fused = dict(map_ordered(run_one, sorted(rank_sets), _workers(args)))
    write_run_file(args.out, fused, args.tag)
    print(f"searched {len(fused)} queries into {args.out}")
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    runs = load_runs(config)
    rank_sets = rank_sets_from_runs(runs, config.ranker_names, strict=config.strict)
    params = {}
    if args.method == "rrf":
        params["k"] = args.rrf_k
    if args.method == "kemeny":
        params["cap"] = args.kemeny_cap
    fused = {
        qid: baselines.aggregate(args.method, rank_sets[qid], depth=config.depth, **params)
        for qid in sorted(rank_sets)
    }
    write_run_file(args.out, fused, args.method)
    print(f"aggregated {len(fused)} queries with {args.method} into {args.out}")
    return 0


def _load_qrels(args: argparse.Namespace):
    if args.qrels:
        return parse_qrels(args.qrels)
    return parse_class_labels(args.class_labels)


def _cmd_eval(args: argparse.Namespace) -> int:
    runs = parse_run_file(args.run, ranker="run")
    qrels = _load_qrels(args)
    report = evaluate_runs(runs, qrels, metric=args.metric, k=args.k)
    if args.per_query:
        write_per_query_metrics(args.per_query, report)
    print(f"mean {report.metric} {report.mean:.6f} over {len(report.per_query)} queries")
    return 0


def _cmd_correlate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    runs = load_runs(config)
    names = list(config.ranker_names)
    if len(names) < 2:
        print("need at least two rankers to correlate", file=sys.stderr)
        return 1
    matrix = {
        a: {b: ranker_correlation(runs[a], runs[b], args.measure) for b in names}
        for a in names
    }
    if args.out:
        write_correlation_matrix(args.out, names, matrix)
    else:
        print("ranker\t" + "\t".join(names))
        for row in names:
            print(row + "\t" + "\t".join(f"{matrix[row][col]:.6f}" for col in names))
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    effectiveness = parse_ranker_effectiveness(args.effectiveness)
    correlations = parse_correlation_matrix(args.correlations) if args.correlations else None
    chosen = select_rankers(effectiveness, correlations, args.strategy)
    print(" ".join(chosen))
    return 0


def _cmd_winners(args: argparse.Namespace) -> int:
    table = parse_effectiveness_table(args.table)
    wins = winning_numbers(table)
    for method in sorted(wins, key=lambda m: (-wins[m], m)):
        print(f"{method}\t{wins[method]}")
    return 0


def _cmd_ttest(args: argparse.Namespace) -> int:
    values_a = parse_per_query_metrics(args.a)
    values_b = parse_per_query_metrics(args.b)
    if set(values_a) != set(values_b):
        print(
            json.dumps({"error": "QuerySetMismatch", "message": "metric files cover different queries"}),
            file=sys.stderr,
        )
        return 1
    qids = sorted(values_a)
    result = paired_t_test(
        [values_a[q] for q in qids], [values_b[q] for q in qids], alpha=args.alpha
    )
    print(
        f"{result.verdict}\tt={result.t_statistic:.6f}\tp={result.p_value:.6f}"
        f"\tmean_diff={result.mean_difference:.6f}\tn={result.n}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusegraph",
        description="Graph-based rank fusion, classical aggregation baselines, "
        "and retrieval evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="build the fusion-graph index (offline)")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--out", required=True, help="index directory to create")
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("search", help="rank the collection for query runs (online)")
    p.add_argument("--index", required=True, help="index directory from extract")
    p.add_argument("--queries", required=True, help="config JSON listing query run files")
    p.add_argument("--out", required=True, help="output TREC run file")
    p.add_argument("--tag", default=DEFAULT_TAG)
    p.add_argument("--exclude-self", action="store_true")
    p.add_argument("--scope", action="store_true", help="restrict to vertex-sharing candidates")
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(fn=_cmd_search)

    p = sub.add_parser("baseline", help="aggregate runs with a classical method")
    p.add_argument("method", choices=sorted(baselines.METHODS))
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rrf-k", type=float, default=baselines.RRF_DEFAULT_K)
    p.add_argument("--kemeny-cap", type=int, default=baselines.KEMENY_DEFAULT_CAP)
    p.set_defaults(fn=_cmd_baseline)

    p = sub.add_parser("eval", help="score a run against judgments")
    p.add_argument("--run", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--qrels")
    group.add_argument("--class-labels")
    p.add_argument("--metric", choices=("ndcg", "ns"), default="ndcg")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--per-query", help="write per-query values to this file")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("correlate", help="pairwise ranker correlations")
    p.add_argument("--config", required=True)
    p.add_argument("--measure", choices=sorted(CORRELATIONS), default="jaccard")
    p.add_argument("--out", help="write TSV matrix here instead of stdout")
    p.set_defaults(fn=_cmd_correlate)

    p = sub.add_parser("select", help="choose rankers to fuse")
    p.add_argument("--effectiveness", required=True, help="lines: ranker value")
    p.add_argument("--correlations", help="TSV matrix from correlate")
    p.add_argument("--strategy", choices=SELECTION_STRATEGIES, required=True)
    p.set_defaults(fn=_cmd_select)

    p = sub.add_parser("winners", help="winning numbers over an effectiveness table")
    p.add_argument("--table", required=True, help="lines: dataset config method value")
    p.set_defaults(fn=_cmd_winners)

    p = sub.add_parser("ttest", help="paired t-test on two per-query metric files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--alpha", type=float, default=0.01)
    p.set_defaults(fn=_cmd_ttest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FusionError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "IOError", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
