"""Retrieval effectiveness metrics, ranker correlations, ranker selection,
winning numbers, and the paired significance test.

NDCG uses raw relevance grades with a log2(p + 1) discount (for the binary
grades produced by class labels this matches the exponential gain variant).
The N-S score counts relevant items among the first four results, the
convention used with fixed four-item classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from scipy import stats as scipy_stats

from .errors import (
    LengthMismatch,
    NotEnoughRankers,
    QuerySetMismatch,
    UnknownQuery,
)
from .model import ItemId, ScoredRank
from .retrieval import FusedRank

def _rank_items(rank) -> Sequence[ItemId]:
    if isinstance(rank, (FusedRank, ScoredRank)):
        return rank.items()
    return list(rank)


class Qrels:
    """Relevance judgments: either explicit grades or derived from class labels.

    With class labels, an item is relevant (grade 1) to a query iff they share
    a label; the query's own label counts, so a query can be relevant to
    itself. Grades are non-negative integers.
    """

    def __init__(
        self,
        grades: Mapping[ItemId, Mapping[ItemId, int]] | None = None,
        class_labels: Mapping[ItemId, str] | None = None,
    ):
        if (grades is None) == (class_labels is None):
            raise ValueError("provide exactly one of grades or class_labels")
        self._grades = {q: dict(docs) for q, docs in grades.items()} if grades else None
        self._labels = dict(class_labels) if class_labels else None
        if self._grades is not None:
            for q, docs in self._grades.items():
                for doc, grade in docs.items():
                    if grade < 0:
                        raise ValueError(f"negative relevance grade for ({q!r}, {doc!r})")
        if self._labels is not None:
            self._label_sizes: dict[str, int] = {}
            for label in self._labels.values():
                self._label_sizes[label] = self._label_sizes.get(label, 0) + 1

    @classmethod
    def from_grades(cls, grades: Mapping[ItemId, Mapping[ItemId, int]]) -> "Qrels":
        return cls(grades=grades)

    @classmethod
    def from_class_labels(cls, labels: Mapping[ItemId, str]) -> "Qrels":
        return cls(class_labels=labels)

    def has_query(self, query: ItemId) -> bool:
        if self._grades is not None:
            return query in self._grades
        assert self._labels is not None
        return query in self._labels

    def _require(self, query: ItemId) -> None:
        if not self.has_query(query):
            raise UnknownQuery(query)

    def relevance(self, query: ItemId, item: ItemId) -> int:
        self._require(query)
        if self._grades is not None:
            return self._grades[query].get(item, 0)
        assert self._labels is not None
        label = self._labels.get(item)
        return 1 if label is not None and label == self._labels[query] else 0

    def ideal_gains(self, query: ItemId) -> list[int]:
        """All positive grades for the query, sorted descending."""
        self._require(query)
        if self._grades is not None:
            return sorted((g for g in self._grades[query].values() if g > 0), reverse=True)
        assert self._labels is not None
        return [1] * self._label_sizes[self._labels[query]]


def _dcg(gains: Iterable[int]) -> float:
    return math.fsum(g / math.log2(p + 1) for p, g in enumerate(gains, start=1))


def ndcg_at_k(rank, qrels: Qrels, k: int = 10) -> float:
    """Normalized discounted cumulative gain at cutoff k; 0 when the query
    has no relevant items at all."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if isinstance(rank, (FusedRank, ScoredRank)):
        query = rank.query
        items = rank.items()
    else:
        raise TypeError("ndcg_at_k needs a FusedRank or ScoredRank (query id required)")
    gains = [qrels.relevance(query, item) for item in items[:k]]
    ideal = qrels.ideal_gains(query)[:k]
    idcg = _dcg(ideal)
    if idcg == 0:
        return 0.0
    return _dcg(gains) / idcg


def ns_score(rank, qrels: Qrels) -> float:
    """Count of relevant items among the first four results of one query.

    Ranks shorter than four count what exists. The dataset-level N-S score is
    the mean of this over all queries.
    """
    if not isinstance(rank, (FusedRank, ScoredRank)):
        raise TypeError("ns_score needs a FusedRank or ScoredRank (query id required)")
    return float(
        sum(1 for item in rank.items()[:4] if qrels.relevance(rank.query, item) > 0)
    )


def jaccard_corr(a, b) -> float:
    """Overlap of the two ranks' item sets: |intersection| / |union|."""
    set_a = set(_rank_items(a))
    set_b = set(_rank_items(b))
    union = set_a | set_b
    if not union:
        return 1.0
    return len(set_a & set_b) / len(union)


def _common_positions(a, b) -> tuple[list[int], list[int]]:
    """Positions (1-indexed, re-ranked) of the shared items in each rank."""
    items_a = list(_rank_items(a))
    items_b = list(_rank_items(b))
    common = set(items_a) & set(items_b)
    sub_a = [item for item in items_a if item in common]
    sub_b = [item for item in items_b if item in common]
    pos_b = {item: p for p, item in enumerate(sub_b, start=1)}
    return list(range(1, len(sub_a) + 1)), [pos_b[item] for item in sub_a]


def kendall_corr(a, b) -> float:
    """1 minus the fraction of discordant pairs, over the shared items.

    Ranks over different item sets are restricted to their intersection;
    an empty intersection yields 0, a single shared item 1.
    """
    _, positions_b = _common_positions(a, b)
    n = len(positions_b)
    if n == 0:
        return 0.0
    if n == 1:
        return 1.0
    discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            if positions_b[i] > positions_b[j]:
                discordant += 1
    return 1.0 - discordant / (n * (n - 1) / 2)


def spearman_corr(a, b) -> float:
    """1 minus the total position disparity over n(n+1), on the shared items.

    As with kendall_corr, differing item sets are restricted to their
    intersection (re-ranked 1..n); empty intersection yields 0.
    """
    positions_a, positions_b = _common_positions(a, b)
    n = len(positions_a)
    if n == 0:
        return 0.0
    disparity = sum(abs(pa - pb) for pa, pb in zip(positions_a, positions_b))
    return 1.0 - disparity / (n * (n + 1))


CORRELATIONS: dict[str, Callable] = {
    "jaccard": jaccard_corr,
    "kendall": kendall_corr,
    "spearman": spearman_corr,
}


def ranker_correlation(
    runs_a: Mapping[ItemId, ScoredRank],
    runs_b: Mapping[ItemId, ScoredRank],
    measure: str | Callable = "jaccard",
) -> float:
    """Mean per-query correlation between two rankers' runs.

    Both runs must cover exactly the same query set.
    """
    if isinstance(measure, str):
        try:
            measure = CORRELATIONS[measure.lower()]
        except KeyError:
            raise ValueError(f"unknown correlation measure {measure!r}") from None
    if set(runs_a) != set(runs_b):
        raise QuerySetMismatch(
            f"query sets differ: {len(runs_a)} vs {len(runs_b)} queries, "
            f"{len(set(runs_a) ^ set(runs_b))} not shared"
        )
    if not runs_a:
        raise QuerySetMismatch("no queries to correlate")
    return math.fsum(measure(runs_a[q], runs_b[q]) for q in sorted(runs_a)) / len(runs_a)


def selection_measure(ef_x: float, ef_y: float, cor: float) -> float:
    """Balance of joint effectiveness against correlation for a ranker pair:
    (1 + ef_x * ef_y) / (1 + cor). Symmetric in the pair."""
    return (1.0 + ef_x * ef_y) / (1.0 + cor)


SELECTION_STRATEGIES = ("all", "top-two", "best-pair", "top-three")


def _pair_correlation(corr: Mapping[str, Mapping[str, float]], x: str, y: str) -> float:
    value = corr.get(x, {}).get(y)
    if value is None:
        value = corr.get(y, {}).get(x)
    if value is None:
        raise ValueError(f"correlation matrix missing pair ({x!r}, {y!r})")
    return value


def select_rankers(
    effectiveness: Mapping[str, float],
    correlations: Mapping[str, Mapping[str, float]] | None,
    strategy: str,
) -> tuple[str, ...]:
    """Pick a ranker subset: all of them, the top two or three by
    effectiveness, or the pair maximizing the selection measure.

    Ordering within the result and all tie-breaks are deterministic
    (effectiveness descending, then ranker name).
    """
    strategy = strategy.lower()
    if strategy not in SELECTION_STRATEGIES:
        raise ValueError(
            f"unknown strategy {strategy!r}; expected one of {SELECTION_STRATEGIES}"
        )
    by_effectiveness = sorted(effectiveness, key=lambda r: (-effectiveness[r], r))
    if strategy == "all":
        return tuple(by_effectiveness)
    if strategy == "top-two":
        if len(by_effectiveness) < 2:
            raise NotEnoughRankers("top-two selection needs at least 2 rankers")
        return tuple(by_effectiveness[:2])
    if strategy == "top-three":
        if len(by_effectiveness) < 3:
            raise NotEnoughRankers("top-three selection needs at least 3 rankers")
        return tuple(by_effectiveness[:3])
    if len(by_effectiveness) < 2:
        raise NotEnoughRankers("best-pair selection needs at least 2 rankers")
    if correlations is None:
        raise ValueError("best-pair selection needs a correlation matrix")
    best_pair: tuple[str, str] | None = None
    best_value = -math.inf
    names = sorted(effectiveness)
    for i, x in enumerate(names):
        for y in names[i + 1 :]:
            value = selection_measure(
                effectiveness[x], effectiveness[y], _pair_correlation(correlations, x, y)
            )
            if value > best_value:
                best_pair, best_value = (x, y), value
    assert best_pair is not None
    return best_pair


def winning_numbers(
    table: Mapping[tuple[str, str], Mapping[str, float]]
) -> dict[str, int]:
    """Count, per method, the (dataset, configuration, rival) cells it
    strictly beats. Every cell must score the same method set."""
    methods: set[str] | None = None
    for cell, values in table.items():
        if methods is None:
            methods = set(values)
        elif set(values) != methods:
            raise ValueError(f"cell {cell!r} does not cover the declared method set")
    if not methods:
        raise ValueError("effectiveness table is empty")
    wins = {method: 0 for method in sorted(methods)}
    for values in table.values():
        for method in methods:
            for rival in methods:
                if method != rival and values[method] > values[rival]:
                    wins[method] += 1
    return wins


VERDICT_A_BETTER = "ABetter"
VERDICT_B_BETTER = "BBetter"
VERDICT_TIE = "Tie"


class TTestResult(NamedTuple):
    verdict: str
    t_statistic: float
    p_value: float
    mean_difference: float
    n: int


def paired_t_test(
    per_query_a: Sequence[float],
    per_query_b: Sequence[float],
    alpha: float = 0.01,
) -> TTestResult:
    """Two-sided paired t-test on per-query metric values.

    Returns a Tie unless the difference is significant at ``alpha``, in which
    case the verdict follows the sign of the mean difference. When every
    difference is identical (zero variance) the t statistic is undefined, so
    the verdict falls back to exact comparison: Tie at zero, otherwise the
    strict direction. The p-value comes from scipy's Student-t distribution,
    whose CDF (regularized incomplete beta) is accurate to near machine
    precision, comfortably beyond six decimal places.
    """
    if len(per_query_a) != len(per_query_b):
        raise LengthMismatch(
            f"paired lists differ in length: {len(per_query_a)} vs {len(per_query_b)}"
        )
    n = len(per_query_a)
    if n < 2:
        raise LengthMismatch(f"need at least 2 paired values, got {n}")
    diffs = [a - b for a, b in zip(per_query_a, per_query_b)]
    mean = math.fsum(diffs) / n
    variance = math.fsum((d - mean) ** 2 for d in diffs) / (n - 1)
    if variance == 0.0:
        if mean == 0.0:
            return TTestResult(VERDICT_TIE, 0.0, 1.0, 0.0, n)
        verdict = VERDICT_A_BETTER if mean > 0 else VERDICT_B_BETTER
        return TTestResult(verdict, math.inf if mean > 0 else -math.inf, 0.0, mean, n)
    t_stat = mean / math.sqrt(variance / n)
    p_value = 2.0 * float(scipy_stats.t.sf(abs(t_stat), n - 1))
    if p_value >= alpha:
        return TTestResult(VERDICT_TIE, t_stat, p_value, mean, n)
    verdict = VERDICT_A_BETTER if mean > 0 else VERDICT_B_BETTER
    return TTestResult(verdict, t_stat, p_value, mean, n)


@dataclass(frozen=True)
class EvalReport:
    """Per-query and aggregate effectiveness for one run under one metric."""

    metric: str
    per_query: dict[ItemId, float]
    mean: float


def evaluate_runs(
    runs: Mapping[ItemId, "FusedRank | ScoredRank"],
    qrels: Qrels,
    metric: str = "ndcg",
    k: int = 10,
) -> EvalReport:
    """Score every query in ``runs`` with NDCG@k or the N-S score."""
    metric = metric.lower()
    per_query: dict[ItemId, float] = {}
    for qid in sorted(runs):
        if metric == "ndcg":
            per_query[qid] = ndcg_at_k(runs[qid], qrels, k)
        elif metric == "ns":
            per_query[qid] = ns_score(runs[qid], qrels)
        else:
            raise ValueError(f"unknown metric {metric!r}; expected 'ndcg' or 'ns'")
    if not per_query:
        raise ValueError("no queries to evaluate")
    label = f"ndcg@{k}" if metric == "ndcg" else "ns"
    return EvalReport(label, per_query, math.fsum(per_query.values()) / len(per_query))
