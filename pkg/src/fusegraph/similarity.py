"""Common-subgraph similarity between fusion graphs.

The literature this follows calls the construct the "minimum common subgraph"
even though it maximizes total weight; we implement the maximization and keep
the conventional MCS/WGU names for the two distances derived from it.

Because vertices are uniquely labeled, the maximum-weight common subgraph is
simply the label intersection with min weights per shared vertex/edge, which
needs no search: O(|V_a| * |V_b|) worst case, linear in practice. A brute
force enumerator is provided as a test oracle for that shortcut.

Graph sizes are computed with math.fsum (exactly rounded), so equal weight
multisets always give equal sizes regardless of iteration order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import BothEmpty, TooLarge
from .graph import FusionGraph

BRUTE_FORCE_VERTEX_CAP = 8


@dataclass
class McsStats:
    """Counts membership probes made by the fast intersection (cost contract)."""

    comparisons: int = 0


def mcs(a: FusionGraph, b: FusionGraph, stats: McsStats | None = None) -> FusionGraph:
    """Maximum-total-weight common subgraph of two uniquely-labeled graphs.

    Shared vertices and edges keep the minimum of their two weights; an edge
    survives only if both endpoints do. An empty intersection yields an empty
    graph, not an error.
    """
    if stats is None:
        stats = McsStats()
    small, large = (a, b) if len(a.vertices) <= len(b.vertices) else (b, a)
    vertices: dict[str, float] = {}
    for item, weight in small.vertices.items():
        stats.comparisons += 1
        other = large.vertices.get(item)
        if other is not None:
            vertices[item] = min(weight, other)
    edges: dict[tuple[str, str], float] = {}
    small_e, large_e = (a, b) if len(a.edges) <= len(b.edges) else (b, a)
    for pair, weight in small_e.edges.items():
        stats.comparisons += 1
        other = large_e.edges.get(pair)
        if other is not None and pair[0] in vertices and pair[1] in vertices:
            edges[pair] = min(weight, other)
    return FusionGraph(a.query, vertices, edges, a.normalized, a.depth, a.rankers)


def graph_size(g: FusionGraph) -> float:
    """Sum of all vertex and edge weights; 0 for the empty graph."""
    return math.fsum(itertools.chain(g.vertices.values(), g.edges.values()))


def _require_nonempty(a: FusionGraph, b: FusionGraph) -> None:
    if not a.vertices and not b.vertices:
        raise BothEmpty("cannot compare two empty graphs (0/0)")


def _union_size(a: FusionGraph, b: FusionGraph) -> float:
    """Size of the union graph: max of the two weights on shared labels.

    Equals |a| + |b| - |mcs| mathematically, but summing the union multiset
    directly keeps the exactly-rounded ordering |union| >= max(|a|, |b|),
    which in turn keeps dist_wgu >= dist_mcs exact in floating point.
    """
    parts = []
    for item, weight in a.vertices.items():
        other = b.vertices.get(item)
        parts.append(weight if other is None else max(weight, other))
    parts.extend(w for item, w in b.vertices.items() if item not in a.vertices)
    for pair, weight in a.edges.items():
        other = b.edges.get(pair)
        parts.append(weight if other is None else max(weight, other))
    parts.extend(w for pair, w in b.edges.items() if pair not in a.edges)
    return math.fsum(parts)


def dist_mcs(a: FusionGraph, b: FusionGraph) -> float:
    """1 - |mcs| / max(|a|, |b|); 0 for identical graphs, 1 for disjoint."""
    _require_nonempty(a, b)
    common = graph_size(mcs(a, b))
    return 1.0 - common / max(graph_size(a), graph_size(b))


def dist_wgu(a: FusionGraph, b: FusionGraph) -> float:
    """1 - |mcs| / |union|, the union size letting the smaller graph matter.

    Never below dist_mcs for the same pair.
    """
    _require_nonempty(a, b)
    common = graph_size(mcs(a, b))
    return 1.0 - common / _union_size(a, b)


def brute_force_mcs(a: FusionGraph, b: FusionGraph) -> FusionGraph:
    """Test oracle: exhaustively enumerate common subgraphs, keep a largest.

    Enumerates every subset of the shared vertex labels and, within each,
    every subset of the shared edges whose endpoints survive, scoring each
    candidate under the same min-weight convention as mcs(). Raises TooLarge
    when more than BRUTE_FORCE_VERTEX_CAP vertex labels are shared, which
    bounds the enumeration at 2^8 vertex subsets.
    """
    shared_vertices = {
        item: min(a.vertices[item], b.vertices[item])
        for item in a.vertices.keys() & b.vertices.keys()
    }
    if len(shared_vertices) > BRUTE_FORCE_VERTEX_CAP:
        raise TooLarge(
            f"{len(shared_vertices)} shared vertices exceed the brute-force cap "
            f"of {BRUTE_FORCE_VERTEX_CAP}"
        )
    shared_edges = {
        pair: min(a.edges[pair], b.edges[pair])
        for pair in a.edges.keys() & b.edges.keys()
    }
    labels = sorted(shared_vertices)
    best: tuple[float, dict, dict] = (0.0, {}, {})
    for r in range(len(labels) + 1):
        for vertex_subset in itertools.combinations(labels, r):
            kept = set(vertex_subset)
            candidate_edges = [
                pair for pair in shared_edges if pair[0] in kept and pair[1] in kept
            ]
            for k in range(len(candidate_edges) + 1):
                for edge_subset in itertools.combinations(candidate_edges, k):
                    size = math.fsum(
                        itertools.chain(
                            (shared_vertices[v] for v in vertex_subset),
                            (shared_edges[e] for e in edge_subset),
                        )
                    )
                    if size > best[0]:
                        best = (
                            size,
                            {v: shared_vertices[v] for v in vertex_subset},
                            {e: shared_edges[e] for e in edge_subset},
                        )
    _, vertices, edges = best
    return FusionGraph(a.query, vertices, edges, a.normalized, a.depth, a.rankers)
