"""Mission planning: distance-matrix assembly, VRP solve, route stitching.

The distance matrix covers every source-to-target and target-to-target
pair (symmetric pairs queried once), assembled through an async provider
with a bounded in-flight window so the result is independent of response
arrival order. The monolith uses the same code path with a local provider
and a window of one, which keeps both deployment modes byte-identical.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field

from . import vrp
from .errors import (
    AllReplicasFailed,
    NoNodeInRange,
    PathServiceUnavailable,
    UnknownNode,
    Unreachable,
    UnreachableTargets,
)
from .fanout import ReplicaPool
from .geo import GeoPoint
from .graphbuild import InfrastructureGraph
from .pathfind import DEFAULT_SNAP_RADIUS_M, PathResult, astar_shortest_path, resolve_endpoint

INF_COST = vrp.INF_COST
DEFAULT_MAX_IN_FLIGHT = 32

MAX_UAVS = 64
MAX_TARGETS = 1024


@dataclass
class MissionRequest:
    uavs: list[GeoPoint]
    targets: list[int]
    seed: int = 0

    def __post_init__(self):
        if not 1 <= len(self.uavs) <= MAX_UAVS:
            raise ValueError(f"need 1..{MAX_UAVS} UAVs, got {len(self.uavs)}")
        if not 1 <= len(self.targets) <= MAX_TARGETS:
            raise ValueError(f"need 1..{MAX_TARGETS} targets, got {len(self.targets)}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("duplicate targets rejected")

    @classmethod
    def from_json_dict(cls, d: dict) -> "MissionRequest":
        return cls(
            uavs=[GeoPoint(float(u["lat"]), float(u["lon"])) for u in d["uavs"]],
            targets=[int(t) for t in d["targets"]],
            seed=int(d.get("seed", 0)),
        )

    def to_json_dict(self) -> dict:
        return {
            "uavs": [{"lat": u.lat, "lon": u.lon} for u in self.uavs],
            "targets": self.targets,
            "seed": self.seed,
        }


@dataclass
class DistanceMatrix:
    """Pairwise costs in integer meters over sources then targets."""

    num_sources: int
    target_ids: list[int]
    cost: list[list[int]]
    path_cache: dict[tuple[int, int], PathResult] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.num_sources + len(self.target_ids)


@dataclass
class MissionPlan:
    routes: list[dict]
    total_distance_m: int

    def to_json_dict(self) -> dict:
        return {"routes": self.routes, "total_distance_m": self.total_distance_m}


def matrix_pairs(num_sources: int, num_targets: int) -> list[tuple[int, int]]:
    """Deterministic (i, j) pair list: source-target first, then target-target."""
    pairs = []
    for i in range(num_sources):
        for j in range(num_targets):
            pairs.append((i, num_sources + j))
    for a in range(num_targets):
        for b in range(a + 1, num_targets):
            pairs.append((num_sources + a, num_sources + b))
    return pairs


class LocalPathProvider:
    """In-process pair resolution against a loaded graph (monolith mode).

    Point snaps are memoized per provider instance: a mission request
    resolves the same UAV position once per paired target otherwise.
    """

    def __init__(self, graph: InfrastructureGraph, snap_radius_m: float = DEFAULT_SNAP_RADIUS_M):
        self.graph = graph
        self.snap_radius_m = snap_radius_m
        self._snap_cache: dict[tuple[float, float], int] = {}

    def _resolve(self, spec) -> int:
        if isinstance(spec, dict) and "point" in spec:
            key = (float(spec["point"]["lat"]), float(spec["point"]["lon"]))
            if key not in self._snap_cache:
                self._snap_cache[key] = resolve_endpoint(self.graph, spec, self.snap_radius_m)
            return self._snap_cache[key]
        return resolve_endpoint(self.graph, spec, self.snap_radius_m)

    async def fetch_pair(self, source_spec, target_spec) -> PathResult | None:
        s = self._resolve(source_spec)
        t = self._resolve(target_spec)
        try:
            return astar_shortest_path(self.graph, s, t)
        except Unreachable:
            return None


class HttpPathProvider:
    """Pair resolution through pathfinder replicas (microservice mode)."""

    def __init__(self, pool: ReplicaPool):
        self.pool = pool

    async def fetch_pair(self, source_spec, target_spec) -> PathResult | None:
        try:
            status, body = await self.pool.post_json(
                "/path", {"source": source_spec, "target": target_spec}
            )
        except AllReplicasFailed as exc:
            raise PathServiceUnavailable(str(exc)) from exc
        if status == 200:
            return PathResult.from_json_dict(json.loads(body))
        detail = json.loads(body).get("detail", {}) if body else {}
        error = detail.get("error") if isinstance(detail, dict) else None
        if status == 422 and error == "Unreachable":
            return None
        if status == 422 and error == "NoNodeInRange":
            raise NoNodeInRange(detail.get("message", "snap failed"))
        if status == 404:
            raise UnknownNode(detail.get("message", "unknown node"))
        raise PathServiceUnavailable(f"pathfinder answered {status}: {body[:200]!r}")


def _endpoint_spec(req: MissionRequest, entity: int) -> dict:
    if entity < len(req.uavs):
        u = req.uavs[entity]
        return {"point": {"lat": u.lat, "lon": u.lon}}
    return {"node": req.targets[entity - len(req.uavs)]}


async def assemble_distance_matrix(
    req: MissionRequest,
    provider,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
) -> DistanceMatrix:
    """Compute all pair costs through the provider with bounded concurrency.

    Entries are filled by pair identity, so the matrix never depends on
    completion order. Raises UnreachableTargets when some target is
    unreachable from every source.
    """
    if max_in_flight < 1:
        raise ValueError("max_in_flight must be >= 1")
    ns, nt = len(req.uavs), len(req.targets)
    n = ns + nt
    pairs = matrix_pairs(ns, nt)
    results: dict[tuple[int, int], PathResult | None] = {}
    semaphore = asyncio.Semaphore(max_in_flight)

    async def run_pair(pair: tuple[int, int]) -> None:
        i, j = pair
        async with semaphore:
            results[pair] = await provider.fetch_pair(
                _endpoint_spec(req, i), _endpoint_spec(req, j)
            )

    await asyncio.gather(*[run_pair(p) for p in pairs])

    cost = [[0] * n for _ in range(n)]
    cache: dict[tuple[int, int], PathResult] = {}
    for i in range(ns):
        for j in range(ns):
            if i != j:
                cost[i][j] = INF_COST
    for (i, j), path in results.items():
        if path is None:
            cost[i][j] = cost[j][i] = INF_COST
        else:
            c = int(round(path.total_cost_m))
            cost[i][j] = cost[j][i] = c
            cache[(i, j)] = path

    unreachable = [
        req.targets[j]
        for j in range(nt)
        if all(cost[i][ns + j] >= INF_COST for i in range(ns))
    ]
    if unreachable:
        raise UnreachableTargets(unreachable)
    return DistanceMatrix(num_sources=ns, target_ids=list(req.targets), cost=cost, path_cache=cache)


def _cached_path(matrix: DistanceMatrix, i: int, j: int) -> PathResult:
    if (i, j) in matrix.path_cache:
        return matrix.path_cache[(i, j)]
    return matrix.path_cache[(j, i)].reversed()


def stitch_plan(req: MissionRequest, matrix: DistanceMatrix, routes: dict[int, list[int]]) -> MissionPlan:
    """Turn VRP routes into waypoint lists from the cached A* paths."""
    ns = matrix.num_sources
    plan_routes = []
    total = 0
    for v in sorted(routes):
        entity_route = routes[v]
        visit_order = [matrix.target_ids[e - ns] for e in entity_route]
        node_ids: list[int] = []
        points: list[GeoPoint] = []
        prev = v
        for e in entity_route:
            leg = _cached_path(matrix, prev, e)
            start = 0 if not node_ids else 1  # drop duplicated junction node
            node_ids.extend(leg.node_ids[start:])
            points.extend(leg.points[start:])
            prev = e
        distance = vrp.route_cost(matrix.cost, v, entity_route)
        total += distance
        plan_routes.append(
            {
                "uav_index": v,
                "visit_order": visit_order,
                "waypoint_node_ids": node_ids,
                "waypoints": [{"lat": p.lat, "lon": p.lon} for p in points],
                "distance_m": distance,
            }
        )
    return MissionPlan(routes=plan_routes, total_distance_m=total)


async def plan_mission_async(
    req: MissionRequest,
    provider,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
) -> MissionPlan:
    matrix = await assemble_distance_matrix(req, provider, max_in_flight)
    routes = vrp.solve_vrp(matrix.cost, matrix.num_sources, seed=req.seed)
    return stitch_plan(req, matrix, routes)


def plan_mission(
    req: MissionRequest,
    graph: InfrastructureGraph,
    snap_radius_m: float = DEFAULT_SNAP_RADIUS_M,
) -> MissionPlan:
    """Monolith entry point: local provider, strictly sequential pairs."""
    provider = LocalPathProvider(graph, snap_radius_m)
    return asyncio.run(plan_mission_async(req, provider, max_in_flight=1))
