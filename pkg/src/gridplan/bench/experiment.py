"""One-shot reproduction of the monolith vs microservices experiment.

Launches the monolith and a scaled microservice deployment over the same
graph on this host, runs the identical workload against both, and emits
reports plus comparison plots. Services run with the JIT kernels disabled
by default so per-pair compute sits in the regime of the original
interpreted pathfinder; pass jit=True to measure the compiled kernels
instead (kernel-level speed is benchmarked separately by kernel-bench).
"""

from __future__ import annotations

import json
import os

from ..graphbuild import read_graph_file
from ..kernels import _DISABLE_ENV
from ..runtime.deploy import launch_microservices, launch_monolith
from .compare import compare_reports
from .report import build_report, write_report
from .runner import run_benchmark
from .workload import WorkloadSpec, generate_workload, workload_hash


def run_experiment(
    graph_file: str,
    out_dir: str,
    spec: WorkloadSpec | None = None,
    replicas: int = 10,
    max_in_flight: int = 32,
    jit: bool = False,
    warmup: bool = True,
) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    graph = read_graph_file(graph_file)
    spec = spec or WorkloadSpec()
    requests = generate_workload(spec, graph)
    whash = workload_hash(requests)
    env_extra = {} if jit else {_DISABLE_ENV: "1"}

    results = {}
    mono_dir = os.path.join(out_dir, "monolith")
    with launch_monolith(graph_file, env_extra=env_extra) as deployment:
        samples = run_benchmark(deployment.url, requests, "monolith", 1, mono_dir, warmup=warmup)
    write_report(build_report(samples, "monolith", 1, whash), mono_dir)
    results["monolith"] = mono_dir

    micro_dir = os.path.join(out_dir, f"micro{replicas}")
    with launch_microservices(
        graph_file, replicas=replicas, max_in_flight=max_in_flight, env_extra=env_extra
    ) as deployment:
        samples = run_benchmark(
            deployment.url, requests, "microservices", replicas, micro_dir, warmup=warmup
        )
    write_report(build_report(samples, "microservices", replicas, whash), micro_dir)
    results["microservices"] = micro_dir

    compare_dir = os.path.join(out_dir, "compare")
    comparison = compare_reports(mono_dir, micro_dir, compare_dir)
    results["compare"] = compare_dir

    summary = {
        "graph_file": graph_file,
        "workload_hash": whash,
        "spec": {
            "source_counts": spec.source_counts,
            "target_counts": spec.target_counts,
            "reps_per_cell": spec.reps_per_cell,
            "seed": spec.seed,
        },
        "replicas": replicas,
        "jit": jit,
        "dirs": results,
        "speedups": {
            f"{row['sources']}x{row['targets']}": round(row["speedup"], 3)
            for row in comparison["cells"]
        },
    }
    with open(os.path.join(out_dir, "experiment.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
    return summary
