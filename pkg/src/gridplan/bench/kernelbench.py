"""Micro-benchmark of the jit kernels against the pure fallbacks."""

from __future__ import annotations

import math
import time

import numpy as np

from .. import kernels
from ..graphbuild import InfrastructureGraph
from .synth import generate_synthetic_graph


def _time(fn, reps: int) -> float:
    fn()  # warm-up / jit compile
    start = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - start) / reps


def run_kernel_bench(n_nodes: int = 5000, seed: int = 7, pairs: int = 50) -> list[dict]:
    graph: InfrastructureGraph = generate_synthetic_graph(n_nodes=n_nodes, seed=seed)
    csr = graph.csr()
    rng = np.random.default_rng(seed)
    n = len(csr.node_ids)
    endpoints = [(int(a), int(b)) for a, b in rng.integers(0, n, size=(pairs, 2))]

    impls = [kernels.pure] + ([kernels.jit] if kernels.jit is not None else [])
    rows = []

    batch_lat = math.radians(55.6)
    batch_lon = math.radians(10.0)

    for impl in impls:
        t = _time(lambda: impl.haversine_many(batch_lat, batch_lon, csr.lat_rad, csr.lon_rad), 50)
        rows.append({"kernel": "haversine_many", "impl": impl.name, "per_call_ms": t * 1000.0})

    for impl in impls:
        def run_astar(impl=impl):
            for s, d in endpoints:
                impl.astar_csr(csr.indptr, csr.nbrs, csr.wts, csr.lat_rad, csr.lon_rad, s, d)

        t = _time(run_astar, 3)
        rows.append(
            {"kernel": "astar_csr", "impl": impl.name, "per_call_ms": t * 1000.0 / pairs}
        )
    return rows


def format_rows(rows: list[dict]) -> str:
    by_kernel: dict[str, dict[str, float]] = {}
    for row in rows:
        by_kernel.setdefault(row["kernel"], {})[row["impl"]] = row["per_call_ms"]
    lines = [f"{'kernel':<16} {'pure ms':>10} {'jit ms':>10} {'speedup':>8}"]
    for kernel, impls in by_kernel.items():
        pure = impls.get("pure")
        jit = impls.get("jit")
        if jit is not None:
            lines.append(f"{kernel:<16} {pure:>10.4f} {jit:>10.4f} {pure / jit:>7.1f}x")
        else:
            lines.append(f"{kernel:<16} {pure:>10.4f} {'n/a':>10} {'n/a':>8}")
    return "\n".join(lines)
