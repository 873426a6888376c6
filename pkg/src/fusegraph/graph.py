"""Fusion graphs: one weighted directed graph per query, built from its ranks.

A graph's vertices are the items retrieved for the query, weighted by how
strongly the query's ranks endorse them. Edges point from a retrieved item A
to items B that A's own ranks endorse, weighted by B's scores in those ranks
damped by A's position in the query's ranks. Weights are finally divided by
their separate vertex/edge maxima so graphs are comparable.

All weight sums use math.fsum, so results are independent of accumulation
order: permuting the rankers of a rank set changes no final weight.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import EmptyGraph, MalformedGraphRecord, MissingRank
from .model import ItemId, RankLookup, RankSet
from .normalize import NormalizationParams

GRAPH_RECORD_VERSION = 1


@dataclass
class BuildStats:
    """Counts rank entries touched while building graphs (cost contract)."""

    entry_visits: int = 0


@dataclass(frozen=True)
class FusionGraph:
    """Weighted directed graph with uniquely labeled vertices.

    ``depth`` and ``rankers`` record the parameters the graph was built with;
    they ride along so a serialized record is self-contained.
    """

    query: ItemId
    vertices: dict[ItemId, float]
    edges: dict[tuple[ItemId, ItemId], float]
    normalized: bool = False
    depth: int | None = None
    rankers: tuple[str, ...] | None = None

    def __post_init__(self):
        for (src, tgt) in self.edges:
            if src == tgt:
                raise ValueError(f"self-edge {src!r} -> {tgt!r} not allowed")
            if src not in self.vertices or tgt not in self.vertices:
                raise ValueError(f"edge {src!r} -> {tgt!r} has endpoint outside vertex set")

    @property
    def is_empty(self) -> bool:
        return not self.vertices


def build_fusion_graph(
    rs: RankSet,
    index: RankLookup,
    params: NormalizationParams,
    strict: bool = False,
    stats: BuildStats | None = None,
) -> FusionGraph:
    """Build and weight-normalize the fusion graph of a normalized rank set.

    ``rs`` must already be normalized (repositioned, rescaled) and ``index``
    must hold the normalized ranks of the items appearing in ``rs``. A vertex
    item with no indexed ranks contributes no outgoing edges in lenient mode
    (the default); strict mode raises MissingRank instead.

    Vertex weights sum the item's rescaled scores across the query's ranks.
    The edge A -> B accumulates, for every rank of the query containing A and
    every rank of A containing B (with B also a vertex and B != A), B's
    rescaled score in A's rank divided by A's position in the query's rank.
    """
    if stats is None:
        stats = BuildStats()
    vertex_parts: dict[ItemId, list[float]] = {}
    for rank in rs:
        for entry in rank:
            stats.entry_visits += 1
            vertex_parts.setdefault(entry.item, []).append(entry.score)
    vertices = {item: math.fsum(parts) for item, parts in vertex_parts.items()}

    edge_parts: dict[tuple[ItemId, ItemId], list[float]] = {}
    for rank in rs:
        for pos, entry in enumerate(rank, start=1):
            item_a = entry.item
            for ranker in rs.ranker_names:
                rank_a = index.get(ranker, item_a)
                if rank_a is None:
                    if strict:
                        raise MissingRank(ranker, item_a)
                    continue
                for neighbor in rank_a:
                    stats.entry_visits += 1
                    item_b = neighbor.item
                    if item_b == item_a or item_b not in vertices:
                        continue
                    edge_parts.setdefault((item_a, item_b), []).append(
                        neighbor.score / pos
                    )
    edges = {pair: math.fsum(parts) for pair, parts in edge_parts.items()}

    graph = FusionGraph(
        query=rs.query,
        vertices=vertices,
        edges=edges,
        normalized=False,
        depth=params.depth,
        rankers=rs.ranker_names,
    )
    return normalize_graph_weights(graph)


def normalize_graph_weights(g: FusionGraph) -> FusionGraph:
    """Divide vertex and edge weights by their separate maxima.

    Idempotent; a graph without edges skips edge normalization. Raises
    EmptyGraph when there is no vertex to normalize.
    """
    if g.is_empty:
        raise EmptyGraph(f"fusion graph for {g.query!r} has no vertices")
    max_vertex = max(g.vertices.values())
    vertices = {item: weight / max_vertex for item, weight in g.vertices.items()}
    if g.edges:
        max_edge = max(g.edges.values())
        edges = {pair: weight / max_edge for pair, weight in g.edges.items()}
    else:
        edges = {}
    return FusionGraph(g.query, vertices, edges, True, g.depth, g.rankers)


def serialize_graph(g: FusionGraph) -> str:
    """One-line JSON record for the graph store.

    Vertices and edges are emitted in sorted label order and floats in
    round-trip decimal form, so serialization is byte-deterministic and
    deserialize(serialize(g)) reproduces every weight bit-for-bit.
    """
    if g.depth is None or g.rankers is None:
        raise ValueError("only graphs carrying depth and ranker metadata can be stored")
    record = {
        "v": GRAPH_RECORD_VERSION,
        "query": g.query,
        "L": g.depth,
        "rankers": list(g.rankers),
        "normalized": g.normalized,
        "vertices": {item: g.vertices[item] for item in sorted(g.vertices)},
        "edges": [[src, tgt, g.edges[(src, tgt)]] for src, tgt in sorted(g.edges)],
    }
    return json.dumps(record, separators=(",", ":"), sort_keys=True)


def deserialize_graph(record: str | bytes) -> FusionGraph:
    """Parse a graph-store record; rejects unknown versions and bad shapes."""
    try:
        data = json.loads(record)
    except json.JSONDecodeError as exc:
        raise MalformedGraphRecord(f"invalid JSON in graph record: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedGraphRecord("graph record is not an object")
    if data.get("v") != GRAPH_RECORD_VERSION:
        raise MalformedGraphRecord(f"unknown graph record version {data.get('v')!r}")
    try:
        query = data["query"]
        depth = int(data["L"])
        rankers = tuple(str(r) for r in data["rankers"])
        normalized = bool(data["normalized"])
        vertices = {str(item): float(w) for item, w in data["vertices"].items()}
        edges = {}
        for src, tgt, weight in data["edges"]:
            edges[(str(src), str(tgt))] = float(weight)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedGraphRecord(f"malformed graph record field: {exc}") from exc
    if not vertices:
        raise EmptyGraph(f"graph record for {query!r} has an empty vertex map")
    try:
        return FusionGraph(query, vertices, edges, normalized, depth, rankers)
    except ValueError as exc:
        raise MalformedGraphRecord(str(exc)) from exc
