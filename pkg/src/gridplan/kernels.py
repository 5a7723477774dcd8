"""Numeric hot kernels: great-circle distances and A* over CSR adjacency.

Two implementations live side by side:

* a numba ``@njit`` path (``jit``), compiled lazily with on-disk caching;
* a pure path (``pure``) using vectorized numpy for batch distance math and
  ``heapq`` for the search loop.

The active path is chosen once at import: the jit path when numba imports
cleanly, the pure path when it does not or when ``GRIDPLAN_DISABLE_JIT=1``
is set in the environment. Both paths implement the same ordering semantics
(heap keyed lexicographically by (f, g, node), strict-improvement
relaxation), so results are interchangeable; ``gridplan kernel-bench``
compares their throughput.
"""

from __future__ import annotations

import heapq
import math
import os
from types import SimpleNamespace

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

_DISABLE_ENV = "GRIDPLAN_DISABLE_JIT"


def _jit_requested() -> bool:
    return os.environ.get(_DISABLE_ENV, "").strip() not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# pure path
# ---------------------------------------------------------------------------

def _pure_haversine_rad(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two radian coordinates."""
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat * 0.5) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon * 0.5) ** 2
    if h > 1.0:
        h = 1.0
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def _pure_haversine_many(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Distances in meters from one radian coordinate to arrays of them."""
    dlat = lats - lat
    dlon = lons - lon
    h = np.sin(dlat * 0.5) ** 2 + np.cos(lat) * np.cos(lats) * np.sin(dlon * 0.5) ** 2
    np.clip(h, 0.0, 1.0, out=h)
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(h))


def _pure_astar_csr(indptr, nbrs, wts, lat_rad, lon_rad, src, dst):
    """A* over CSR adjacency; returns (total_cost, path_indices, expansions).

    total_cost is -1.0 when dst is unreachable. The heap is ordered by
    (f, g, node) and a node's tentative cost is only replaced on strict
    improvement, which pins the tie-breaking behaviour.
    """
    n = lat_rad.shape[0]
    g = np.full(n, np.inf)
    parent = np.full(n, -2, dtype=np.int64)
    closed = np.zeros(n, dtype=bool)

    tlat = lat_rad[dst]
    tlon = lon_rad[dst]
    h0 = _pure_haversine_rad(lat_rad[src], lon_rad[src], tlat, tlon)
    heap = [(h0, 0.0, src)]
    g[src] = 0.0
    parent[src] = -1
    expansions = 0
    found = False
    pop = heapq.heappop
    push = heapq.heappush
    hav = _pure_haversine_rad
    while heap:
        f, gu, u = pop(heap)
        if closed[u]:
            continue
        closed[u] = True
        expansions += 1
        if u == dst:
            found = True
            break
        for k in range(indptr[u], indptr[u + 1]):
            v = nbrs[k]
            if closed[v]:
                continue
            ng = gu + wts[k]
            if ng < g[v]:
                g[v] = ng
                parent[v] = u
                push(heap, (ng + hav(lat_rad[v], lon_rad[v], tlat, tlon), ng, v))
    if not found:
        return -1.0, np.empty(0, dtype=np.int64), expansions
    count = 0
    u = dst
    while u != -1:
        count += 1
        u = parent[u]
    path = np.empty(count, dtype=np.int64)
    u = dst
    for i in range(count - 1, -1, -1):
        path[i] = u
        u = parent[u]
    return float(g[dst]), path, expansions


pure = SimpleNamespace(
    name="pure",
    haversine_rad=_pure_haversine_rad,
    haversine_many=_pure_haversine_many,
    astar_csr=_pure_astar_csr,
)


# ---------------------------------------------------------------------------
# jit path
# ---------------------------------------------------------------------------

def _build_jit():
    from numba import njit

    hav_rad = njit(cache=True)(_pure_haversine_rad)

    @njit(cache=True)
    def haversine_many(lat, lon, lats, lons):
        n = lats.shape[0]
        out = np.empty(n)
        for i in range(n):
            out[i] = hav_rad(lat, lon, lats[i], lons[i])
        return out

    @njit(cache=True)
    def _less(hf, hg, hn, a, b):
        if hf[a] != hf[b]:
            return hf[a] < hf[b]
        if hg[a] != hg[b]:
            return hg[a] < hg[b]
        return hn[a] < hn[b]

    @njit(cache=True)
    def _push(hf, hg, hn, size, f, g, node):
        i = size
        hf[i] = f
        hg[i] = g
        hn[i] = node
        while i > 0:
            p = (i - 1) // 2
            if _less(hf, hg, hn, i, p):
                hf[i], hf[p] = hf[p], hf[i]
                hg[i], hg[p] = hg[p], hg[i]
                hn[i], hn[p] = hn[p], hn[i]
                i = p
            else:
                break
        return size + 1

    @njit(cache=True)
    def _pop(hf, hg, hn, size):
        f = hf[0]
        g = hg[0]
        node = hn[0]
        size -= 1
        if size > 0:
            hf[0] = hf[size]
            hg[0] = hg[size]
            hn[0] = hn[size]
            i = 0
            while True:
                l = 2 * i + 1
                r = l + 1
                m = i
                if l < size and _less(hf, hg, hn, l, m):
                    m = l
                if r < size and _less(hf, hg, hn, r, m):
                    m = r
                if m == i:
                    break
                hf[i], hf[m] = hf[m], hf[i]
                hg[i], hg[m] = hg[m], hg[i]
                hn[i], hn[m] = hn[m], hn[i]
                i = m
        return f, g, node, size

    @njit(cache=True)
    def astar_csr(indptr, nbrs, wts, lat_rad, lon_rad, src, dst):
        n = lat_rad.shape[0]
        g = np.full(n, np.inf)
        parent = np.full(n, -2, dtype=np.int64)
        closed = np.zeros(n, dtype=np.bool_)
        cap = nbrs.shape[0] + 2
        hf = np.empty(cap)
        hg = np.empty(cap)
        hn = np.empty(cap, dtype=np.int64)

        tlat = lat_rad[dst]
        tlon = lon_rad[dst]
        size = _push(hf, hg, hn, 0, hav_rad(lat_rad[src], lon_rad[src], tlat, tlon), 0.0, src)
        g[src] = 0.0
        parent[src] = -1
        expansions = 0
        found = False
        while size > 0:
            f, gu, u, size = _pop(hf, hg, hn, size)
            if closed[u]:
                continue
            closed[u] = True
            expansions += 1
            if u == dst:
                found = True
                break
            for k in range(indptr[u], indptr[u + 1]):
                v = nbrs[k]
                if closed[v]:
                    continue
                ng = gu + wts[k]
                if ng < g[v]:
                    g[v] = ng
                    parent[v] = u
                    size = _push(
                        hf, hg, hn, size,
                        ng + hav_rad(lat_rad[v], lon_rad[v], tlat, tlon), ng, v,
                    )
        if not found:
            return -1.0, np.empty(0, dtype=np.int64), expansions
        count = 0
        u = dst
        while u != -1:
            count += 1
            u = parent[u]
        path = np.empty(count, dtype=np.int64)
        u = dst
        for i in range(count - 1, -1, -1):
            path[i] = u
            u = parent[u]
        return g[dst], path, expansions

    return SimpleNamespace(
        name="jit",
        haversine_rad=hav_rad,
        haversine_many=haversine_many,
        astar_csr=astar_csr,
    )


jit = None
if _jit_requested():
    try:
        jit = _build_jit()
    except ImportError:  # numba genuinely absent
        jit = None

active = jit if jit is not None else pure
JIT_ENABLED = active is not pure


def haversine_deg(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two degree coordinates."""
    rad = math.radians
    return active.haversine_rad(rad(lat1), rad(lon1), rad(lat2), rad(lon2))


def haversine_many_deg(lat: float, lon: float, lats_deg: np.ndarray, lons_deg: np.ndarray) -> np.ndarray:
    """Distances in meters from one degree coordinate to degree arrays."""
    return active.haversine_many(
        math.radians(lat), math.radians(lon), np.radians(lats_deg), np.radians(lons_deg)
    )
