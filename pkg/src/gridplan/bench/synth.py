"""Synthetic infrastructure graphs for load experiments.

Nodes are scattered over a Denmark-sized box and wired like a power grid:
a k-nearest-neighbor backbone of direct edges plus sampled penalized
cross-links, with components stitched together so every pair is reachable.
Deterministic for a fixed seed.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..geo import GeoPoint, haversine_distance
from ..graphbuild import DIRECT, INDIRECT, Edge, InfrastructureGraph


def generate_synthetic_graph(
    n_nodes: int = 5000,
    seed: int = 0,
    south: float = 55.0,
    west: float = 9.0,
    lat_span: float = 1.2,
    lon_span: float = 2.0,
    k_neighbors: int = 6,
    cross_link_radius_km: float = 1.5,
    cross_link_prob: float = 0.05,
    penalty_factor: float = 3.0,
) -> InfrastructureGraph:
    rng = np.random.default_rng(seed)
    lat = south + rng.random(n_nodes) * lat_span
    lon = west + rng.random(n_nodes) * lon_span
    # 6-decimal coordinates survive graph serialization bit-identically
    lat = np.round(lat, 6)
    lon = np.round(lon, 6)
    nodes = {i + 1: GeoPoint(float(lat[i]), float(lon[i])) for i in range(n_nodes)}

    mid = np.radians(south + lat_span / 2)
    pts = np.column_stack([lat * 111.0, lon * 111.0 * np.cos(mid)])
    tree = cKDTree(pts)

    edges: dict[tuple[int, int], Edge] = {}

    def add(i: int, j: int, kind: str) -> None:
        u, v = i + 1, j + 1
        key = (min(u, v), max(u, v))
        if u != v and key not in edges:
            factor = 1.0 if kind == DIRECT else penalty_factor
            cost = factor * haversine_distance(nodes[u], nodes[v])
            if cost > 0:
                edges[key] = Edge(key[0], key[1], cost, kind)

    _, knn = tree.query(pts, k=k_neighbors + 1)
    for i in range(n_nodes):
        for j in knn[i][1:]:
            add(i, int(j), DIRECT)

    cross = sorted(tree.query_pairs(cross_link_radius_km))
    keep = rng.random(len(cross)) < cross_link_prob
    for (i, j), k in zip(cross, keep):
        if k:
            add(i, j, INDIRECT)

    # stitch components: repeatedly connect the component containing the
    # lowest node to its nearest outside node
    parent = list(range(n_nodes))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (u, v) in edges:
        ra, rb = find(u - 1), find(v - 1)
        if ra != rb:
            parent[ra] = rb

    while True:
        roots = {}
        for i in range(n_nodes):
            roots.setdefault(find(i), []).append(i)
        if len(roots) == 1:
            break
        comps = sorted(roots.values(), key=lambda c: c[0])
        base = comps[0]
        others = np.array([i for c in comps[1:] for i in c])
        sub = cKDTree(pts[others])
        dists, idxs = sub.query(pts[base], k=1)
        pick = int(np.argmin(dists))
        i, j = base[pick], int(others[idxs[pick]])
        add(i, j, DIRECT)
        parent[find(i)] = find(j)

    return InfrastructureGraph(nodes, list(edges.values()))
