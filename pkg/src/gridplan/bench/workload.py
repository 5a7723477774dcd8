"""Deterministic benchmark workloads over the sources-by-targets grid."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import GraphTooSmall
from ..graphbuild import InfrastructureGraph

SOURCE_COUNTS = [1, 2, 4, 8, 16]
TARGET_COUNTS = [1, 2, 4, 8, 16, 32, 64]
DESK_REPS = 10
PAPER_REPS = 100


@dataclass
class WorkloadSpec:
    source_counts: list[int] = field(default_factory=lambda: list(SOURCE_COUNTS))
    target_counts: list[int] = field(default_factory=lambda: list(TARGET_COUNTS))
    reps_per_cell: int = DESK_REPS
    seed: int = 0
    graph_ref: str = ""

    @property
    def cells(self) -> int:
        return len(self.source_counts) * len(self.target_counts)

    @property
    def total_requests(self) -> int:
        return self.cells * self.reps_per_cell

    @classmethod
    def from_json_dict(cls, d: dict) -> "WorkloadSpec":
        spec = cls()
        for key in ("source_counts", "target_counts", "reps_per_cell", "seed", "graph_ref"):
            if key in d:
                setattr(spec, key, d[key])
        return spec


@dataclass
class BenchRequest:
    sources: int
    targets: int
    rep: int
    payload: dict  # the /plan request body


def generate_workload(spec: WorkloadSpec, graph: InfrastructureGraph) -> list[BenchRequest]:
    """Sample distinct node ids per cell and rep with one seeded generator.

    UAVs start on tower locations, so sources are node positions; targets
    are node ids. Identical (spec, graph) always yields the identical
    request list.
    """
    node_ids = sorted(graph.nodes)
    need = max(spec.source_counts) + max(spec.target_counts)
    if len(node_ids) < need:
        raise GraphTooSmall(f"graph has {len(node_ids)} nodes, workload needs {need}")
    rng = np.random.default_rng(spec.seed)
    ids = np.array(node_ids, dtype=np.int64)
    requests: list[BenchRequest] = []
    for s in spec.source_counts:
        for t in spec.target_counts:
            for rep in range(spec.reps_per_cell):
                picked = rng.choice(ids, size=s + t, replace=False)
                uavs = [
                    {"lat": graph.nodes[int(n)].lat, "lon": graph.nodes[int(n)].lon}
                    for n in picked[:s]
                ]
                targets = [int(n) for n in picked[s:]]
                requests.append(
                    BenchRequest(
                        sources=s,
                        targets=t,
                        rep=rep,
                        payload={"uavs": uavs, "targets": targets, "seed": spec.seed},
                    )
                )
    return requests


def workload_hash(requests: list[BenchRequest]) -> str:
    canonical = json.dumps(
        [[r.sources, r.targets, r.rep, r.payload] for r in requests],
        separators=(",", ":"),
        sort_keys=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
