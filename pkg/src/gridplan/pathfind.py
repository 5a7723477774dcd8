"""Shortest paths over the infrastructure graph.

A* uses the raw haversine-to-target heuristic, admissible because every
edge costs at least the haversine distance of its endpoints. The priority
queue breaks ties deterministically by (f, g, node id), so replicas and
deployment modes produce identical paths.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import httpx

from . import kernels
from .errors import GraphUnavailable, UnknownNode, Unreachable
from .geo import GeoPoint, snap_to_nearest_node
from .graphbuild import InfrastructureGraph, deserialize_graph, read_graph_file

DEFAULT_SNAP_RADIUS_M = 5000.0


@dataclass
class PathResult:
    node_ids: list[int]
    points: list[GeoPoint]
    segment_costs_m: list[float]
    total_cost_m: float

    def to_json_dict(self) -> dict:
        return {
            "node_ids": self.node_ids,
            "points": [{"lat": p.lat, "lon": p.lon} for p in self.points],
            "segment_costs_m": self.segment_costs_m,
            "total_cost_m": self.total_cost_m,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PathResult":
        return cls(
            node_ids=[int(n) for n in d["node_ids"]],
            points=[GeoPoint(p["lat"], p["lon"]) for p in d["points"]],
            segment_costs_m=[float(c) for c in d["segment_costs_m"]],
            total_cost_m=float(d["total_cost_m"]),
        )

    def reversed(self) -> "PathResult":
        return PathResult(
            node_ids=list(reversed(self.node_ids)),
            points=list(reversed(self.points)),
            segment_costs_m=list(reversed(self.segment_costs_m)),
            total_cost_m=self.total_cost_m,
        )


def astar_with_stats(
    g: InfrastructureGraph, source: int, target: int
) -> tuple[PathResult, int]:
    """A* shortest path plus the number of expanded nodes."""
    if source not in g.nodes:
        raise UnknownNode(f"node {source} not in graph")
    if target not in g.nodes:
        raise UnknownNode(f"node {target} not in graph")
    if source == target:
        return PathResult([source], [g.nodes[source]], [], 0.0), 0

    csr = g.csr()
    total, path_idx, expansions = kernels.active.astar_csr(
        csr.indptr, csr.nbrs, csr.wts, csr.lat_rad, csr.lon_rad,
        csr.index_of[source], csr.index_of[target],
    )
    if total < 0:
        raise Unreachable(f"no path from {source} to {target}")

    node_ids = [int(csr.node_ids[i]) for i in path_idx]
    points = [g.nodes[nid] for nid in node_ids]
    segment_costs: list[float] = []
    for a, b in zip(path_idx, path_idx[1:]):
        for k in range(csr.indptr[a], csr.indptr[a + 1]):
            if csr.nbrs[k] == b:
                segment_costs.append(float(csr.wts[k]))
                break
    return PathResult(node_ids, points, segment_costs, float(total)), expansions


def astar_shortest_path(g: InfrastructureGraph, source: int, target: int) -> PathResult:
    result, _ = astar_with_stats(g, source, target)
    return result


def resolve_endpoint(g: InfrastructureGraph, spec, snap_radius_m: float) -> int:
    """Turn a {'node': id} or {'point': {lat, lon}} endpoint into a node id."""
    if isinstance(spec, dict) and "node" in spec:
        node = int(spec["node"])
        if node not in g.nodes:
            raise UnknownNode(f"node {node} not in graph")
        return node
    if isinstance(spec, dict) and "point" in spec:
        p = spec["point"]
        return snap_to_nearest_node(GeoPoint(float(p["lat"]), float(p["lon"])), g, snap_radius_m)
    if isinstance(spec, int):
        if spec not in g.nodes:
            raise UnknownNode(f"node {spec} not in graph")
        return spec
    raise ValueError(f"endpoint must be {{'node': id}} or {{'point': {{lat,lon}}}}, got {spec!r}")


class GraphCache:
    """Fetch-once graph holder backing the pathfinder.

    The graph comes from a local file (loaded eagerly) or from graph-service
    URLs (fetched lazily, exactly once even under concurrent first requests;
    a failed fetch is retried once and leaves the latch open for the next
    request).
    """

    def __init__(
        self,
        graph_file: str | None = None,
        graph_urls: list[str] | None = None,
        client: httpx.Client | None = None,
    ):
        if not graph_file and not graph_urls:
            raise ValueError("GraphCache needs a graph file or at least one graph URL")
        self._file = graph_file
        self._urls = list(graph_urls or [])
        self._client = client
        self._graph: InfrastructureGraph | None = None
        self._lock = threading.Lock()
        self.fetch_count = 0
        if self._file:
            self._graph = read_graph_file(self._file)

    @property
    def loaded(self) -> bool:
        return self._graph is not None

    def get(self) -> InfrastructureGraph:
        if self._graph is not None:
            return self._graph
        with self._lock:
            if self._graph is not None:
                return self._graph
            self._graph = self._fetch()
            return self._graph

    def invalidate(self) -> None:
        with self._lock:
            self._graph = None
            if self._file:
                self._graph = read_graph_file(self._file)

    def _fetch(self) -> InfrastructureGraph:
        client = self._client or httpx
        last_error: Exception | None = None
        attempts = [self._urls[i % len(self._urls)] for i in range(2)]
        for url in attempts:
            try:
                resp = client.get(url.rstrip("/") + "/graph", timeout=30.0)
                if resp.status_code != 200:
                    last_error = GraphUnavailable(f"{url} answered {resp.status_code}")
                    continue
                graph = deserialize_graph(resp.content)
                self.fetch_count += 1
                return graph
            except (httpx.HTTPError, OSError) as exc:
                last_error = exc
        raise GraphUnavailable(
            f"graph fetch failed after retry against {self._urls}"
        ) from last_error
