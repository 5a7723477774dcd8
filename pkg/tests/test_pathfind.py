import random

import pytest

from gridplan.errors import GraphUnavailable, UnknownNode, Unreachable
from gridplan.geo import GeoPoint, haversine_distance
from gridplan.graphbuild import Edge, InfrastructureGraph, serialize_graph
from gridplan.pathfind import GraphCache, astar_shortest_path, astar_with_stats

import oracles


def random_connected_graph(rng: random.Random, n: int) -> InfrastructureGraph:
    nodes = {
        i + 1: GeoPoint(55 + rng.random() * 0.5, 10 + rng.random() * 0.8) for i in range(n)
    }
    ids = sorted(nodes)
    edges = {}
    for i in range(1, n):
        a, b = ids[i], ids[rng.randrange(i)]
        key = (min(a, b), max(a, b))
        edges[key] = Edge(key[0], key[1], haversine_distance(nodes[a], nodes[b]), "direct")
    for _ in range(n):
        a, b = rng.choice(ids), rng.choice(ids)
        key = (min(a, b), max(a, b))
        if a != b and key not in edges:
            cost = 3.0 * haversine_distance(nodes[a], nodes[b])
            edges[key] = Edge(key[0], key[1], max(cost, 1e-6), "indirect")
    return InfrastructureGraph(nodes, list(edges.values()))


def line_graph(costs: list[float]) -> InfrastructureGraph:
    # evenly spaced nodes on a meridian; costs overridden per edge
    nodes = {i + 1: GeoPoint(55 + 0.001 * i, 10.0) for i in range(len(costs) + 1)}
    edges = [Edge(i + 1, i + 2, c, "direct") for i, c in enumerate(costs)]
    return InfrastructureGraph(nodes, edges)


def test_identity_path():
    g = line_graph([3.0, 4.0])
    r = astar_shortest_path(g, 2, 2)
    assert r.node_ids == [2]
    assert r.segment_costs_m == []
    assert r.total_cost_m == 0.0


def test_unique_line_path():
    g = line_graph([3.0, 4.0])
    r = astar_shortest_path(g, 1, 3)
    assert r.node_ids == [1, 2, 3]
    assert r.segment_costs_m == [3.0, 4.0]
    assert r.total_cost_m == 7.0


def test_unknown_node():
    g = line_graph([3.0])
    with pytest.raises(UnknownNode):
        astar_shortest_path(g, 1, 99)


def test_unreachable():
    nodes = {1: GeoPoint(55.0, 10.0), 2: GeoPoint(55.001, 10.0), 3: GeoPoint(56.0, 11.0), 4: GeoPoint(56.001, 11.0)}
    edges = [
        Edge(1, 2, haversine_distance(nodes[1], nodes[2]), "direct"),
        Edge(3, 4, haversine_distance(nodes[3], nodes[4]), "direct"),
    ]
    g = InfrastructureGraph(nodes, edges)
    with pytest.raises(Unreachable):
        astar_shortest_path(g, 1, 4)


def test_astar_matches_dijkstra_on_random_graphs():
    rng = random.Random(404)
    for _ in range(20):
        g = random_connected_graph(rng, rng.randint(20, 120))
        ids = sorted(g.nodes)
        adj = g.adjacency()
        for _ in range(10):
            s, t = rng.choice(ids), rng.choice(ids)
            result, expansions = astar_with_stats(g, s, t)
            d_cost, d_path, d_exp = oracles.dijkstra(adj, s, t)
            assert d_cost is not None
            assert result.total_cost_m == d_cost
            assert expansions <= d_exp
            assert sum(result.segment_costs_m) == pytest.approx(result.total_cost_m, rel=1e-6)


def test_path_result_internal_consistency():
    rng = random.Random(11)
    g = random_connected_graph(rng, 60)
    ids = sorted(g.nodes)
    for _ in range(30):
        s, t = rng.choice(ids), rng.choice(ids)
        r = astar_shortest_path(g, s, t)
        assert len(r.segment_costs_m) == len(r.node_ids) - 1
        assert len(r.points) == len(r.node_ids)
        assert len(set(r.node_ids)) == len(r.node_ids)  # simple path
        for a, b, c in zip(r.node_ids, r.node_ids[1:], r.segment_costs_m):
            assert g.edge_cost(a, b) == c
        assert sum(r.segment_costs_m) == pytest.approx(r.total_cost_m, rel=1e-6)


def test_deterministic_repeat():
    rng = random.Random(77)
    g = random_connected_graph(rng, 80)
    r1 = astar_shortest_path(g, min(g.nodes), max(g.nodes))
    r2 = astar_shortest_path(g, min(g.nodes), max(g.nodes))
    assert r1.node_ids == r2.node_ids
    assert r1.total_cost_m == r2.total_cost_m


class _StubClient:
    """Counts /graph GETs; can be told to fail some number of times first."""

    def __init__(self, payload: bytes, fail_first: int = 0):
        self.payload = payload
        self.fail_first = fail_first
        self.calls = 0

    def get(self, url, timeout=None):
        import httpx

        self.calls += 1
        if self.calls <= self.fail_first:
            raise httpx.ConnectError("down")
        return httpx.Response(200, content=self.payload)


def test_graph_cache_fetches_once():
    g = line_graph([3.0])
    client = _StubClient(serialize_graph(g))
    cache = GraphCache(graph_urls=["http://replica-a"], client=client)
    assert not cache.loaded
    g1 = cache.get()
    g2 = cache.get()
    assert g1 is g2
    assert client.calls == 1


def test_graph_cache_retry_then_recover():
    g = line_graph([3.0])
    client = _StubClient(serialize_graph(g), fail_first=2)
    cache = GraphCache(graph_urls=["http://replica-a"], client=client)
    with pytest.raises(GraphUnavailable):
        cache.get()  # two failed attempts (initial + retry)
    assert cache.get() is not None  # service recovered
    assert client.calls == 3


def test_graph_cache_from_file(tmp_path):
    g = line_graph([3.0, 4.0])
    path = tmp_path / "g.json"
    path.write_bytes(serialize_graph(g))
    cache = GraphCache(graph_file=str(path))
    assert cache.loaded
    assert cache.get() == g
