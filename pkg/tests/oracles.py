"""Independent reference implementations used to check the package.

Everything here is deliberately naive (linear scans, plain-dict Dijkstra,
exhaustive enumeration) and shares no code with the implementations under
test beyond the public domain types.
"""

from __future__ import annotations

import heapq
import itertools
import math

from gridplan.geo import GeoPoint

EARTH_RADIUS_M = 6_371_000.0


def haversine_reference(a: GeoPoint, b: GeoPoint) -> float:
    la1, lo1, la2, lo2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    h = (
        math.sin((la2 - la1) / 2) ** 2
        + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(min(h, 1.0)))


def linear_scan_nearest(p: GeoPoint, nodes: dict[int, GeoPoint]) -> tuple[int, float]:
    best_id, best_d = None, None
    for nid in sorted(nodes):
        d = haversine_reference(p, nodes[nid])
        if best_d is None or d < best_d:
            best_id, best_d = nid, d
    return best_id, best_d


def linear_scan_radius(p: GeoPoint, nodes: dict[int, GeoPoint], radius_m: float) -> list[int]:
    hits = []
    for nid, loc in nodes.items():
        d = haversine_reference(p, loc)
        if d <= radius_m:
            hits.append((d, nid))
    hits.sort()
    return [nid for _, nid in hits]


def dijkstra(adjacency: dict[int, list[tuple[int, float]]], source: int, target: int):
    """Plain-dict Dijkstra; returns (cost, path, expansions) or (None, None, expansions)."""
    dist = {source: 0.0}
    heap = [(0.0, source, -1)]
    parents = {}
    closed = set()
    expansions = 0
    while heap:
        d, u, par = heapq.heappop(heap)
        if u in closed:
            continue
        closed.add(u)
        parents[u] = par
        expansions += 1
        if u == target:
            path = [u]
            while parents[path[-1]] != -1:
                path.append(parents[path[-1]])
            path.reverse()
            return d, path, expansions
        for v, w in adjacency[u]:
            if v in closed:
                continue
            nd = d + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v, u))
    return None, None, expansions


def pairwise_within_radius(nodes: dict[int, GeoPoint], radius_m: float) -> set[tuple[int, int]]:
    pairs = set()
    ids = sorted(nodes)
    for a_pos, a in enumerate(ids):
        for b in ids[a_pos + 1 :]:
            if haversine_reference(nodes[a], nodes[b]) <= radius_m:
                pairs.add((a, b))
    return pairs


def brute_force_vrp(cost: list[list[int]], num_vehicles: int) -> int:
    """Exact optimum over all target partitions and orderings (open routes)."""
    n = len(cost)
    targets = list(range(num_vehicles, n))

    def route_cost(vehicle: int, order: tuple[int, ...]) -> int:
        if not order:
            return 0
        total = cost[vehicle][order[0]]
        for a, b in zip(order, order[1:]):
            total += cost[a][b]
        return total

    best = None
    for assignment in itertools.product(range(num_vehicles), repeat=len(targets)):
        groups = {v: [t for t, a in zip(targets, assignment) if a == v] for v in range(num_vehicles)}
        total = 0
        feasible = True
        for v, group in groups.items():
            best_route = None
            for order in itertools.permutations(group):
                c = route_cost(v, order)
                if best_route is None or c < best_route:
                    best_route = c
            if best_route is None:
                best_route = 0
            if best_route >= 1 << 61:
                feasible = False
                break
            total += best_route
        if feasible and (best is None or total < best):
            best = total
    return best


def naive_cheapest_insertion(cost: list[list[int]], num_vehicles: int, target_indices: list[int]):
    """Reference construction: full (target, vehicle, position) re-enumeration."""
    routes = {v: [] for v in range(num_vehicles)}
    remaining = sorted(target_indices)
    while remaining:
        best = None
        for ti, target in enumerate(remaining):
            for v in range(num_vehicles):
                route = routes[v]
                for pos in range(len(route) + 1):
                    prev = v if pos == 0 else route[pos - 1]
                    if pos == len(route):
                        delta = cost[prev][target]
                    else:
                        delta = cost[prev][target] + cost[target][route[pos]] - cost[prev][route[pos]]
                    if best is None or delta < best[0]:
                        best = (delta, ti, v, pos)
        delta, ti, v, pos = best
        if delta >= 1 << 62:
            raise AssertionError("infeasible instance handed to naive construction")
        routes[v].insert(pos, remaining.pop(ti))
    return routes
