"""Shared builders for tests: quick rank construction and synthetic collections."""

from __future__ import annotations

import json
import random

import numpy as np

from fusegraph.model import CollectionRankIndex, RankSet, ScoredEntry, ScoredRank

TOY_LAYOUT = {
    "r1": {"A": ["A", "B"], "B": ["B", "X"], "C": ["C", "X"]},
    "r2": {"A": ["A", "C"], "B": ["B", "Y"], "C": ["C", "Y"]},
}
TOY_QUERY = {"r1": {"q": ["A", "B"]}, "r2": {"q": ["A", "C"]}}


def write_runs(directory, layout, tag):
    """Write per-ranker TREC run files for a {ranker: {qid: [docs]}} layout."""
    paths = {}
    for ranker, per_query in layout.items():
        lines = []
        for qid in sorted(per_query):
            for pos, doc in enumerate(per_query[qid], start=1):
                lines.append(f"{qid} Q0 {doc} {pos} {10.0 - pos} {tag}\n")
        path = directory / f"{ranker}.{tag}.run"
        path.write_text("".join(lines), encoding="utf-8")
        paths[ranker] = path
    return paths


def write_config(directory, name, run_paths, depth=2, **extra):
    config = {
        "rankers": [
            {"name": ranker, "run": str(path), "polarity": "similarity"}
            for ranker, path in sorted(run_paths.items())
        ],
        "depth": depth,
        "comparator": "WGU",
    }
    config.update(extra)
    path = directory / name
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


def mkrank(query, ranker, items, scores=None, depth=None):
    """Build a ScoredRank from an item list; default scores descend from 1.0."""
    if scores is None:
        scores = [1.0 - 0.5 * i / max(1, len(items)) for i in range(len(items))]
    entries = tuple(ScoredEntry(item, score) for item, score in zip(items, scores))
    return ScoredRank(query, ranker, entries, depth if depth is not None else len(entries))


def mkrankset(query, *ranked_lists, depth=None):
    """RankSet from item lists, rankers named r1, r2, ..."""
    ranks = tuple(
        mkrank(query, f"r{i}", items, depth=depth)
        for i, items in enumerate(ranked_lists, start=1)
    )
    return RankSet(query, ranks)


def worked_example_index(L=2):
    """The hand-traced two-ranker fixture behind the worked fusion graph.

    Queries q, A, B, C; B and C rank only themselves plus items outside the
    graph's vertex set (X, Y), which have no ranks of their own.
    """
    layout = {
        "r1": {"q": ["A", "B"], "A": ["A", "B"], "B": ["B", "X"], "C": ["C", "X"]},
        "r2": {"q": ["A", "C"], "A": ["A", "C"], "B": ["B", "Y"], "C": ["C", "Y"]},
    }
    ranks = {
        ranker: {
            query: mkrank(query, ranker, items, scores=[1.0, 0.1], depth=L)
            for query, items in per_query.items()
        }
        for ranker, per_query in layout.items()
    }
    return CollectionRankIndex(ranks)


def random_rank_index(rng: random.Random, n_items=20, n_rankers=3, depth=5):
    """Random collection index: every item is a query with a random rank."""
    items = [f"d{i:03d}" for i in range(n_items)]
    ranks = {}
    for r in range(n_rankers):
        ranker = f"r{r + 1}"
        per_query = {}
        for query in items:
            pool = [i for i in items if i != query]
            rng.shuffle(pool)
            listed = [query] + pool[: depth - 1]
            scores = sorted((rng.uniform(0.1, 10.0) for _ in listed), reverse=True)
            per_query[query] = mkrank(query, ranker, listed, scores, depth)
        ranks[ranker] = per_query
    return CollectionRankIndex(ranks)


def synthetic_collection(seed, n_items=60, n_classes=12, n_rankers=3, depth=10):
    """Labeled synthetic collection with complementary noisy rankers.

    Items are points around class centers. Each ranker observes them through
    its own corruption, mild for the classes it is "good at" (round-robin by
    class index) and strong otherwise, so no single ranker dominates and
    fusing them genuinely helps. Run scores are positional with a random
    per-query curvature: consistent with the rank order but not calibrated
    across queries, like real run files.

    Returns (CollectionRankIndex, labels dict item -> class name).
    """
    rng = np.random.default_rng(seed)
    dims = 6
    centers = rng.normal(0.0, 4.0, size=(n_classes, dims))
    per_class = n_items // n_classes
    items, labels, vectors = [], {}, []
    for c in range(n_classes):
        for k in range(per_class):
            item = f"s{c:02d}_{k}"
            items.append(item)
            labels[item] = f"class{c:02d}"
            vectors.append(centers[c] + rng.normal(0.0, 0.6, size=dims))
    vectors = np.asarray(vectors)
    class_of = np.repeat(np.arange(n_classes), per_class)

    ranks = {}
    for r in range(n_rankers):
        ranker = f"r{r + 1}"
        noise_scale = np.where(class_of % n_rankers == r, 0.7, 2.6)
        view = vectors + rng.normal(0.0, 1.0, size=vectors.shape) * noise_scale[:, None]
        per_query = {}
        for qi, query in enumerate(items):
            distances = np.linalg.norm(view - view[qi], axis=1)
            order = np.argsort(distances, kind="stable")[:depth]
            curvature = rng.uniform(0.2, 5.0)
            scores = np.linspace(1.0, 0.05, num=len(order)) ** curvature
            entries = tuple(
                ScoredEntry(items[j], float(s)) for j, s in zip(order, scores)
            )
            per_query[query] = ScoredRank(query, ranker, entries, depth)
        ranks[ranker] = per_query
    return CollectionRankIndex(ranks), labels
