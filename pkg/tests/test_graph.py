import itertools
import random

import pytest

from fusegraph.errors import EmptyGraph, MalformedGraphRecord, MissingRank
from fusegraph.graph import (
    BuildStats,
    FusionGraph,
    build_fusion_graph,
    deserialize_graph,
    normalize_graph_weights,
    serialize_graph,
)
from fusegraph.model import RankSet, assemble_rank_set
from fusegraph.normalize import NormalizationParams, normalize_collection

from helpers import mkrank, random_rank_index, worked_example_index


@pytest.fixture
def worked_graph():
    index = worked_example_index()
    rs = RankSet("q", (index.get("r1", "q"), index.get("r2", "q")))
    return build_fusion_graph(rs, index, NormalizationParams(2))


def test_worked_example_weights(worked_graph):
    assert worked_graph.vertices == {"A": 1.0, "B": 0.05, "C": 0.05}
    assert worked_graph.edges == {("A", "B"): 1.0, ("A", "C"): 1.0}
    assert worked_graph.normalized


def test_smallest_graph_single_self_rank():
    index_rank = mkrank("q", "r1", ["q"], scores=[1.0], depth=1)
    from fusegraph.model import CollectionRankIndex

    index = CollectionRankIndex({"r1": {"q": index_rank}})
    graph = build_fusion_graph(RankSet("q", (index_rank,)), index, NormalizationParams(1))
    assert graph.vertices == {"q": 1.0}
    assert graph.edges == {}


def test_build_deterministic(worked_graph):
    index = worked_example_index()
    rs = RankSet("q", (index.get("r1", "q"), index.get("r2", "q")))
    assert build_fusion_graph(rs, index, NormalizationParams(2)) == worked_graph


def test_ranker_permutation_changes_nothing():
    rng = random.Random(11)
    index = random_rank_index(rng, n_items=14, n_rankers=4, depth=5)
    params = NormalizationParams(5)
    normalized = normalize_collection(index, index.rankers, params)
    rs = assemble_rank_set("d003", normalized, normalized.rankers)
    reference = build_fusion_graph(rs, normalized, params)
    for perm in itertools.permutations(rs.ranks):
        permuted = RankSet("d003", perm)
        graph = build_fusion_graph(permuted, normalized, params)
        assert graph.vertices == reference.vertices
        assert graph.edges == reference.edges


def test_vertex_bounds():
    rng = random.Random(5)
    index = random_rank_index(rng, n_items=20, n_rankers=3, depth=6)
    params = NormalizationParams(6)
    normalized = normalize_collection(index, index.rankers, params)
    for item in normalized.collection_items()[:8]:
        rs = assemble_rank_set(item, normalized, normalized.rankers)
        graph = build_fusion_graph(rs, normalized, params)
        assert set(graph.vertices) == rs.item_union()
        assert len(graph.vertices) <= len(rs) * params.depth
        assert graph.vertices
        assert max(graph.vertices.values()) == 1.0
        for (src, tgt) in graph.edges:
            assert src != tgt
            assert src in graph.vertices and tgt in graph.vertices


def test_lenient_vertex_without_ranks_has_no_out_edges(worked_graph):
    # X and Y never get indexed ranks; B's and C's edges to them exist, but
    # X/Y themselves emit nothing (exercised indirectly: the worked graph has
    # no edges out of B or C because their neighbors fall outside the vertex set)
    sources = {src for src, _ in worked_graph.edges}
    assert sources == {"A"}


def test_strict_mode_raises_for_rankless_vertex():
    index = worked_example_index()
    rs = RankSet("q", (index.get("r1", "q"), index.get("r2", "q")))
    # q's vertices are A, B, C, all ranked; make one unreachable instead
    from fusegraph.model import CollectionRankIndex

    partial = CollectionRankIndex(
        {
            "r1": {"q": index.get("r1", "q"), "A": index.get("r1", "A")},
            "r2": {"q": index.get("r2", "q"), "A": index.get("r2", "A")},
        }
    )
    with pytest.raises(MissingRank):
        build_fusion_graph(rs, partial, NormalizationParams(2), strict=True)
    lenient = build_fusion_graph(rs, partial, NormalizationParams(2))
    assert lenient.vertices == {"A": 1.0, "B": 0.05, "C": 0.05}


def test_normalize_graph_weights_values():
    graph = FusionGraph("q", {"A": 2.0, "B": 0.1, "C": 0.1}, {})
    out = normalize_graph_weights(graph)
    assert out.vertices == {"A": 1.0, "B": 0.05, "C": 0.05}
    assert out.normalized


def test_normalize_graph_weights_idempotent(worked_graph):
    again = normalize_graph_weights(worked_graph)
    assert again.vertices == worked_graph.vertices
    assert again.edges == worked_graph.edges


def test_normalize_graph_weights_no_edges_ok():
    out = normalize_graph_weights(FusionGraph("q", {"A": 0.5}, {}))
    assert out.vertices == {"A": 1.0}
    assert out.edges == {}


def test_normalize_graph_weights_empty_graph():
    with pytest.raises(EmptyGraph):
        normalize_graph_weights(FusionGraph("q", {}, {}))


def test_graph_constructor_rejects_bad_edges():
    with pytest.raises(ValueError, match="self-edge"):
        FusionGraph("q", {"A": 1.0}, {("A", "A"): 1.0})
    with pytest.raises(ValueError, match="endpoint"):
        FusionGraph("q", {"A": 1.0}, {("A", "B"): 1.0})


def test_serialize_round_trip(worked_graph):
    line = serialize_graph(worked_graph)
    assert deserialize_graph(line) == worked_graph
    # byte-determinism of re-serialization
    assert serialize_graph(deserialize_graph(line)) == line


def test_serialize_requires_metadata():
    with pytest.raises(ValueError):
        serialize_graph(FusionGraph("q", {"A": 1.0}, {}, True))


def test_deserialize_rejects_garbage():
    with pytest.raises(MalformedGraphRecord):
        deserialize_graph("{not json")
    with pytest.raises(MalformedGraphRecord):
        deserialize_graph('{"v": 99, "query": "q"}')
    with pytest.raises(MalformedGraphRecord):
        deserialize_graph('[1, 2, 3]')


def test_deserialize_truncated_record(worked_graph):
    line = serialize_graph(worked_graph)
    with pytest.raises(MalformedGraphRecord):
        deserialize_graph(line[: len(line) // 2])


def test_deserialize_empty_vertex_map():
    record = '{"v": 1, "query": "q", "L": 2, "rankers": ["r1"], "normalized": true, "vertices": {}, "edges": []}'
    with pytest.raises(EmptyGraph):
        deserialize_graph(record)


def test_build_stats_counts_visits():
    index = worked_example_index()
    rs = RankSet("q", (index.get("r1", "q"), index.get("r2", "q")))
    stats = BuildStats()
    build_fusion_graph(rs, index, NormalizationParams(2), stats=stats)
    m, L = 2, 2
    assert 0 < stats.entry_visits <= 4 * m * m * L * L
