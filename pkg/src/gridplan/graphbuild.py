"""Weighted infrastructure graph: direct/indirect adjacency and serialization.

Direct neighbors are consecutive tower refs along a power line; indirect
neighbors come from the geo radius search and carry a penalty multiplier so
planned paths hug the physical lines. The serialized form quantizes
coordinates and costs to fixed 6-decimal strings for cross-platform
bit-stability.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import CorruptGraphFile, EmptyStore
from .geo import GeoPoint, haversine_distance
from .osm import PowerLine
from .store import InfraStore

log = logging.getLogger(__name__)

GRAPH_SCHEMA_VERSION = 1
DEFAULT_PENALTY_FACTOR = 3.0
DEFAULT_INDIRECT_RADIUS_M = 500.0

DIRECT = "direct"
INDIRECT = "indirect"


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    cost_m: float
    kind: str


class CsrGraph:
    """Array view of a graph for the search kernels; node order = sorted ids."""

    def __init__(self, nodes: dict[int, GeoPoint], adjacency: dict[int, list[tuple[int, float]]]):
        self.node_ids = np.array(sorted(nodes), dtype=np.int64)
        self.index_of = {int(nid): i for i, nid in enumerate(self.node_ids)}
        self.lat_rad = np.radians(np.array([nodes[int(n)].lat for n in self.node_ids]))
        self.lon_rad = np.radians(np.array([nodes[int(n)].lon for n in self.node_ids]))
        n = len(self.node_ids)
        counts = np.zeros(n + 1, dtype=np.int64)
        for nid, nbrs in adjacency.items():
            counts[self.index_of[nid] + 1] = len(nbrs)
        self.indptr = np.cumsum(counts)
        m = int(self.indptr[-1])
        self.nbrs = np.empty(m, dtype=np.int64)
        self.wts = np.empty(m)
        for nid in map(int, self.node_ids):
            base = self.indptr[self.index_of[nid]]
            for k, (other, cost) in enumerate(adjacency[nid]):
                self.nbrs[base + k] = self.index_of[other]
                self.wts[base + k] = cost


class InfrastructureGraph:
    """Undirected weighted graph over tower locations."""

    def __init__(self, nodes: dict[int, GeoPoint], edges: list[Edge]):
        self.nodes = dict(nodes)
        self.edges = list(edges)
        self._adjacency: dict[int, list[tuple[int, float]]] | None = None
        self._csr: CsrGraph | None = None
        self._validate()

    def _validate(self) -> None:
        seen: set[tuple[int, int]] = set()
        for e in self.edges:
            if e.u == e.v:
                raise ValueError(f"self-loop on node {e.u}")
            if e.u not in self.nodes or e.v not in self.nodes:
                raise ValueError(f"edge ({e.u},{e.v}) references unknown node")
            if e.cost_m <= 0:
                raise ValueError(f"edge ({e.u},{e.v}) has non-positive cost")
            key = (min(e.u, e.v), max(e.u, e.v))
            if key in seen:
                raise ValueError(f"duplicate edge for pair {key}")
            seen.add(key)

    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        if self._adjacency is None:
            adj: dict[int, list[tuple[int, float]]] = {nid: [] for nid in self.nodes}
            for e in self.edges:
                adj[e.u].append((e.v, e.cost_m))
                adj[e.v].append((e.u, e.cost_m))
            for lst in adj.values():
                lst.sort()
            self._adjacency = adj
        return self._adjacency

    def csr(self) -> CsrGraph:
        if self._csr is None:
            self._csr = CsrGraph(self.nodes, self.adjacency())
        return self._csr

    def edge_cost(self, u: int, v: int) -> float | None:
        for other, cost in self.adjacency().get(u, ()):
            if other == v:
                return cost
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, InfrastructureGraph):
            return NotImplemented
        return _signature(self) == _signature(other)

    def __hash__(self):  # graphs are mutable containers; identity hashing
        return id(self)


def _q6(x: float) -> str:
    return f"{x:.6f}"


def _signature(g: InfrastructureGraph):
    nodes = {nid: (_q6(p.lat), _q6(p.lon)) for nid, p in g.nodes.items()}
    edges = sorted(
        (min(e.u, e.v), max(e.u, e.v), _q6(e.cost_m), e.kind) for e in g.edges
    )
    return nodes, edges


def derive_direct_neighbors(
    lines: list[PowerLine], tower_ids: set[int]
) -> set[tuple[int, int]]:
    """Unordered pairs of consecutive tower refs along each line.

    Non-tower refs are deleted from the sequence first, so towers separated
    only by plain line nodes still count as direct neighbors.
    """
    pairs: set[tuple[int, int]] = set()
    for line in lines:
        towers_on_line = [r for r in line.node_refs if r in tower_ids]
        for a, b in zip(towers_on_line, towers_on_line[1:]):
            if a != b:
                pairs.add((min(a, b), max(a, b)))
    return pairs


def derive_indirect_neighbors(
    store: InfraStore, direct: set[tuple[int, int]], radius_m: float
) -> set[tuple[int, int]]:
    """All tower pairs within the radius that are not already direct."""
    if radius_m <= 0:
        raise ValueError("radius must be positive")
    pairs: set[tuple[int, int]] = set()
    for tower in store.towers.values():
        for other in store.geo_near(tower.location, radius_m):
            if other.id == tower.id:
                continue
            key = (min(tower.id, other.id), max(tower.id, other.id))
            if key not in direct:
                pairs.add(key)
    return pairs


def build_graph(
    store: InfraStore,
    penalty_factor: float = DEFAULT_PENALTY_FACTOR,
    indirect_radius_m: float = DEFAULT_INDIRECT_RADIUS_M,
    include_bridges: bool = False,
) -> InfrastructureGraph:
    """Assemble the weighted graph from an ingested store.

    Direct edges cost the raw haversine distance; indirect edges cost
    penalty_factor times it. A pair qualifying as both stays direct.
    """
    if penalty_factor < 1.0:
        raise ValueError("penalty_factor must be >= 1")
    if not store.towers:
        raise EmptyStore("store has no towers")

    nodes: dict[int, GeoPoint] = {t.id: t.location for t in store.towers.values()}
    tower_ids = set(nodes)
    direct = derive_direct_neighbors(list(store.power_lines.values()), tower_ids)
    indirect = derive_indirect_neighbors(store, direct, indirect_radius_m)

    edges: list[Edge] = []
    for u, v in sorted(direct):
        edges.append(Edge(u, v, haversine_distance(nodes[u], nodes[v]), DIRECT))
    for u, v in sorted(indirect):
        cost = penalty_factor * haversine_distance(nodes[u], nodes[v])
        edges.append(Edge(u, v, cost, INDIRECT))

    if include_bridges:
        for bridge in store.bridges.values():
            if bridge.id in nodes:
                log.warning("bridge %s collides with an existing node id, skipped", bridge.id)
                continue
            centroid = _ring_centroid(store, bridge.node_refs)
            if centroid is None:
                log.warning("bridge %s has unresolvable ring nodes, skipped", bridge.id)
                continue
            linked = False
            for tower in store.geo_near(centroid, indirect_radius_m):
                cost = penalty_factor * haversine_distance(centroid, tower.location)
                if cost > 0:
                    edges.append(Edge(min(bridge.id, tower.id), max(bridge.id, tower.id), cost, INDIRECT))
                    linked = True
            if linked:
                nodes[bridge.id] = centroid
            else:
                edges = [e for e in edges if bridge.id not in (e.u, e.v)]

    return InfrastructureGraph(nodes, edges)


def _ring_centroid(store: InfraStore, refs: list[int]) -> GeoPoint | None:
    locs = [store.node_location(r) for r in refs[:-1]]
    if any(l is None for l in locs):
        return None
    return GeoPoint(
        sum(l.lat for l in locs) / len(locs),
        sum(l.lon for l in locs) / len(locs),
    )


def serialize_graph(g: InfrastructureGraph) -> bytes:
    """Canonical JSON bytes with 6-decimal coordinate and cost strings."""
    doc = {
        "schema_version": GRAPH_SCHEMA_VERSION,
        "nodes": {
            str(nid): [_q6(p.lat), _q6(p.lon)] for nid, p in sorted(g.nodes.items())
        },
        "edges": [
            [e[0], e[1], e[2], e[3]]
            for e in sorted(
                (min(x.u, x.v), max(x.u, x.v), _q6(x.cost_m), x.kind) for x in g.edges
            )
        ],
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8")


def deserialize_graph(payload: bytes) -> InfrastructureGraph:
    """Inverse of :func:`serialize_graph`; raises CorruptGraphFile on damage."""
    try:
        doc = json.loads(payload.decode("utf-8"))
        if doc["schema_version"] != GRAPH_SCHEMA_VERSION:
            raise CorruptGraphFile(
                f"graph schema_version {doc['schema_version']}, expected {GRAPH_SCHEMA_VERSION}"
            )
        nodes = {
            int(nid): GeoPoint(float(lat), float(lon))
            for nid, (lat, lon) in doc["nodes"].items()
        }
        edges = [
            Edge(int(u), int(v), float(cost), str(kind)) for u, v, cost, kind in doc["edges"]
        ]
        for e in edges:
            if e.kind not in (DIRECT, INDIRECT):
                raise CorruptGraphFile(f"unknown edge kind {e.kind!r}")
        return InfrastructureGraph(nodes, edges)
    except CorruptGraphFile:
        raise
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise CorruptGraphFile(f"graph payload unreadable: {exc}") from exc


def write_graph_file(g: InfrastructureGraph, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_graph(g))


def read_graph_file(path: str) -> InfrastructureGraph:
    try:
        with open(path, "rb") as fh:
            return deserialize_graph(fh.read())
    except OSError as exc:
        raise CorruptGraphFile(f"cannot read graph file {path}: {exc}") from exc
