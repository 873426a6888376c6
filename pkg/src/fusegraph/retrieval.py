"""The composite ranker: offline fusion-graph index, online graph retrieval.

Offline, every collection item is turned into a normalized fusion graph.
Online, a query's ranks are normalized the same way, its graph is built on
the fly, and collection items are ranked by ascending graph distance (MCS or
WGU). Ties are broken by ascending item id so runs are reproducible.

The index directory holds a manifest, the serialized graphs, and the raw
per-ranker rank orders of the collection (raw positions are what the online
normalization of an incoming query needs). Everything downstream is
recomputed deterministically from those.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .errors import BothEmpty, MalformedGraphRecord, MissingRank, RankerMismatch
from .graph import BuildStats, FusionGraph, build_fusion_graph, deserialize_graph, serialize_graph
from .model import (
    CollectionRankIndex,
    ItemId,
    RankLookup,
    RankSet,
    ScoredEntry,
    ScoredRank,
    assemble_rank_set,
)
from .normalize import (
    NormalizationParams,
    normalize_collection,
    normalize_rank,
    normalize_rank_set,
)
from .similarity import dist_mcs, dist_wgu

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
GRAPHS_NAME = "graphs.jsonl"
RANKS_NAME = "collection_ranks.jsonl"

COMPARATORS: dict[str, Callable[[FusionGraph, FusionGraph], float]] = {
    "MCS": dist_mcs,
    "WGU": dist_wgu,
}


@dataclass(frozen=True)
class FusedRank:
    """The final fused rank for one query.

    Entries are (item, value) in rank order. For graph retrieval the values
    are distances and ascend; baseline aggregators reuse the type with
    descending scores and set ``higher_is_better``.
    """

    query: ItemId
    entries: tuple[tuple[ItemId, float], ...]
    higher_is_better: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((item, float(v)) for item, v in self.entries)
        )
        seen = set()
        for item, _ in self.entries:
            if item in seen:
                raise ValueError(f"duplicate item {item!r} in fused rank")
            seen.add(item)

    def items(self) -> tuple[ItemId, ...]:
        return tuple(item for item, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class FusionGraphIndex:
    """Normalized fusion graphs for the whole response set."""

    graphs: dict[ItemId, FusionGraph]
    params: NormalizationParams
    ranker_names: tuple[str, ...]
    comparator: str
    _vertex_owners: dict[ItemId, set[ItemId]] | None = field(
        default=None, repr=False, compare=False, init=False
    )

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise ValueError(
                f"comparator must be one of {sorted(COMPARATORS)}, got {self.comparator!r}"
            )

    @property
    def distance(self) -> Callable[[FusionGraph, FusionGraph], float]:
        return COMPARATORS[self.comparator]

    def vertex_owners(self) -> dict[ItemId, set[ItemId]]:
        """Inverted map vertex label -> items whose graphs contain it."""
        if self._vertex_owners is None:
            owners: dict[ItemId, set[ItemId]] = {}
            for item, graph in self.graphs.items():
                for label in graph.vertices:
                    owners.setdefault(label, set()).add(item)
            self._vertex_owners = owners
        return self._vertex_owners


def map_ordered(fn, inputs, workers: int):
    """Apply fn over inputs, in order, optionally on a thread pool.

    Results are collected in input order, so output never depends on worker
    count or scheduling.
    """
    if workers <= 1:
        return [fn(x) for x in inputs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, inputs))


def index_collection(
    index: CollectionRankIndex,
    rankers: Iterable[str],
    params: NormalizationParams,
    comparator: str = "WGU",
    strict: bool = False,
    workers: int = 1,
    stats: BuildStats | None = None,
) -> FusionGraphIndex:
    """Build one normalized fusion graph per collection item.

    In strict mode every item must have a rank under every chosen ranker;
    in lenient mode missing ranks are skipped and an item with no ranks at
    all is left out of the graph index (logged).
    """
    rankers = tuple(rankers)
    normalized = normalize_collection(index, rankers, params)

    def build(item: ItemId) -> tuple[ItemId, FusionGraph | None]:
        available = [r for r in rankers if normalized.get(r, item) is not None]
        if strict and len(available) < len(rankers):
            missing = next(r for r in rankers if normalized.get(r, item) is None)
            raise MissingRank(missing, item)
        if not available:
            logger.warning("item %s has no ranks under any chosen ranker; skipped", item)
            return item, None
        rs = assemble_rank_set(item, normalized, available)
        return item, build_fusion_graph(rs, normalized, params, strict=strict, stats=stats)

    results = map_ordered(build, index.collection_items(), workers)
    graphs = {item: graph for item, graph in results if graph is not None}
    return FusionGraphIndex(graphs, params, rankers, comparator)


def candidate_scope(fg_index: FusionGraphIndex, query_graph: FusionGraph) -> set[ItemId]:
    """Items whose graphs share at least one vertex label with the query's.

    Every excluded item provably has distance 1, so scoping cannot change a
    fused rank.
    """
    owners = fg_index.vertex_owners()
    scope: set[ItemId] = set()
    for label in query_graph.vertices:
        scope.update(owners.get(label, ()))
    return scope


def build_query_graph(
    query_ranks: RankSet,
    fg_index: FusionGraphIndex,
    index: RankLookup,
    normalized_index: RankLookup | None = None,
    strict: bool = False,
) -> FusionGraph:
    """Normalize a query's ranks and build its fusion graph on the fly.

    ``index`` is the raw collection index; the query's own (raw) ranks are
    overlaid on it, so out-of-collection queries work as long as their m
    ranks over the collection are supplied. When ``normalized_index`` is not
    given, the normalized neighbor ranks are recomputed from the raw index.
    """
    params = fg_index.params
    if set(query_ranks.ranker_names) != set(fg_index.ranker_names):
        raise RankerMismatch(
            f"query rankers {sorted(query_ranks.ranker_names)} != "
            f"index rankers {sorted(fg_index.ranker_names)}"
        )
    for rank in query_ranks:
        if rank.depth != params.depth:
            raise RankerMismatch(
                f"query rank under {rank.ranker!r} has depth {rank.depth}, "
                f"index uses L={params.depth}"
            )
    raw = index.overlay(query_ranks)
    normalized_query = normalize_rank_set(query_ranks, raw, params)
    if normalized_index is None:
        normalized_index = _normalize_neighbors(normalized_query, index, params)
    lookup = normalized_index.overlay(normalized_query)
    return build_fusion_graph(normalized_query, lookup, params, strict=strict)


def _normalize_neighbors(
    normalized_query: RankSet, index: RankLookup, params: NormalizationParams
) -> RankLookup:
    """Normalize just the collection ranks the query's vertex items need."""
    ranks: dict[str, dict[ItemId, ScoredRank]] = {r: {} for r in normalized_query.ranker_names}
    for item in sorted(normalized_query.item_union()):
        for ranker in normalized_query.ranker_names:
            raw_rank = index.get(ranker, item)
            if raw_rank is not None:
                ranks[ranker][item] = normalize_rank(raw_rank, index, params)
    return CollectionRankIndex(ranks)


def fuse_query(
    query_ranks: RankSet,
    fg_index: FusionGraphIndex,
    index: RankLookup,
    normalized_index: RankLookup | None = None,
    exclude_self: bool = False,
    use_scope: bool = False,
    workers: int = 1,
) -> FusedRank:
    """Rank the indexed collection by graph distance to the query's graph.

    Distances are sorted ascending with ties broken by item id, then cut to
    L. A comparison where both graphs are empty is reported as distance 1
    (and logged) instead of failing the query.
    """
    query_graph = build_query_graph(query_ranks, fg_index, index, normalized_index)
    candidates = sorted(fg_index.graphs)
    scope = candidate_scope(fg_index, query_graph) if use_scope else None
    distance = fg_index.distance

    def score(item: ItemId) -> tuple[ItemId, float]:
        if scope is not None and item not in scope:
            return item, 1.0
        try:
            return item, distance(query_graph, fg_index.graphs[item])
        except BothEmpty:
            logger.warning(
                "both graphs empty comparing query %s with %s; using distance 1",
                query_ranks.query,
                item,
            )
            return item, 1.0

    scored = map_ordered(score, candidates, workers)
    if exclude_self:
        scored = [(item, d) for item, d in scored if item != query_ranks.query]
    scored.sort(key=lambda pair: (pair[1], pair[0]))
    return FusedRank(query_ranks.query, tuple(scored[: fg_index.params.depth]))


def save_index(directory: str | Path, fg_index: FusionGraphIndex, raw_index: CollectionRankIndex) -> None:
    """Persist the graph index plus the raw rank orders it was built from.

    File contents are fully sorted, so rebuilding from identical inputs is
    byte-identical.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "v": MANIFEST_VERSION,
        "rankers": list(fg_index.ranker_names),
        "L": fg_index.params.depth,
        "sentinel": fg_index.params.missing_position_sentinel,
        "comparator": fg_index.comparator,
        "n": raw_index.collection_size,
        "graph_count": len(fg_index.graphs),
        "files": {"graphs": GRAPHS_NAME, "ranks": RANKS_NAME},
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with open(directory / GRAPHS_NAME, "w", encoding="utf-8") as fh:
        for item in sorted(fg_index.graphs):
            fh.write(serialize_graph(fg_index.graphs[item]) + "\n")
    with open(directory / RANKS_NAME, "w", encoding="utf-8") as fh:
        for ranker in fg_index.ranker_names:
            for query in sorted(raw_index.queries(ranker)):
                rank = raw_index.get(ranker, query)
                assert rank is not None
                record = {
                    "ranker": ranker,
                    "query": query,
                    "items": list(rank.items()),
                    "scores": [entry.score for entry in rank],
                }
                fh.write(json.dumps(record, separators=(",", ":"), sort_keys=True) + "\n")


def load_index(directory: str | Path) -> tuple[FusionGraphIndex, CollectionRankIndex]:
    """Load a persisted index directory: (graph index, raw collection index)."""
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST_NAME).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedGraphRecord(f"cannot read index manifest: {exc}") from exc
    if manifest.get("v") != MANIFEST_VERSION:
        raise MalformedGraphRecord(f"unknown index manifest version {manifest.get('v')!r}")
    params = NormalizationParams(int(manifest["L"]), int(manifest["sentinel"]))
    rankers = tuple(str(r) for r in manifest["rankers"])
    comparator = str(manifest["comparator"])

    graphs: dict[ItemId, FusionGraph] = {}
    with open(directory / manifest["files"]["graphs"], encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                graph = deserialize_graph(line)
                graphs[graph.query] = graph
    if len(graphs) != int(manifest["graph_count"]):
        raise MalformedGraphRecord(
            f"graph store holds {len(graphs)} graphs, manifest says {manifest['graph_count']}"
        )

    ranks: dict[str, dict[ItemId, ScoredRank]] = {r: {} for r in rankers}
    with open(directory / manifest["files"]["ranks"], encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                ranker = record["ranker"]
                query = record["query"]
                entries = tuple(
                    ScoredEntry(item, score)
                    for item, score in zip(record["items"], record["scores"], strict=True)
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise MalformedGraphRecord(
                    f"bad rank record at line {line_no}: {exc}"
                ) from exc
            ranks.setdefault(ranker, {})[query] = ScoredRank(
                query, ranker, entries, params.depth
            )
    raw_index = CollectionRankIndex(ranks)
    fg_index = FusionGraphIndex(graphs, params, rankers, comparator)
    return fg_index, raw_index
