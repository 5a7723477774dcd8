import csv
import json

import httpx
import numpy as np
import pytest

from gridplan.bench.compare import compare_reports
from gridplan.bench.report import build_report, load_report, write_report
from gridplan.bench.runner import read_samples_csv, run_benchmark
from gridplan.bench.synth import generate_synthetic_graph
from gridplan.bench.workload import (
    PAPER_REPS,
    WorkloadSpec,
    generate_workload,
    workload_hash,
)
from gridplan.errors import EndpointDown, GraphTooSmall, WorkloadMismatch

import oracles


@pytest.fixture(scope="module")
def graph():
    return generate_synthetic_graph(n_nodes=300, seed=3)


def test_synth_graph_connected_and_deterministic():
    g1 = generate_synthetic_graph(n_nodes=400, seed=9)
    g2 = generate_synthetic_graph(n_nodes=400, seed=9)
    assert g1 == g2
    adj = g1.adjacency()
    seen, stack = set(), [next(iter(g1.nodes))]
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(v for v, _ in adj[u])
    assert len(seen) == len(g1.nodes)


def test_workload_grid_accounting(graph):
    spec = WorkloadSpec(reps_per_cell=10, seed=1)
    reqs = generate_workload(spec, graph)
    assert len(reqs) == 350  # 5x7 grid, 10 reps
    spec.reps_per_cell = PAPER_REPS
    assert len(generate_workload(spec, graph)) == 3500


def test_workload_deterministic_and_distinct(graph):
    spec = WorkloadSpec(seed=7)
    a = generate_workload(spec, graph)
    b = generate_workload(spec, graph)
    assert workload_hash(a) == workload_hash(b)
    assert [r.payload for r in a] == [r.payload for r in b]
    for r in a:
        picked = [(u["lat"], u["lon"]) for u in r.payload["uavs"]]
        assert len(set(picked)) == len(picked)
        assert len(set(r.payload["targets"])) == len(r.payload["targets"])


def test_workload_source_target_disjoint():
    g = generate_synthetic_graph(n_nodes=80, seed=2)
    spec = WorkloadSpec(source_counts=[1], target_counts=[1], reps_per_cell=50, seed=0)
    for r in generate_workload(spec, g):
        uav = (r.payload["uavs"][0]["lat"], r.payload["uavs"][0]["lon"])
        target_node = g.nodes[r.payload["targets"][0]]
        assert uav != (target_node.lat, target_node.lon)  # distinct node draw


def test_workload_graph_too_small():
    g = generate_synthetic_graph(n_nodes=60, seed=2)
    with pytest.raises(GraphTooSmall):
        generate_workload(WorkloadSpec(), g)  # needs 16+64 nodes


def _stub_client(latency_by_cell=None, fail_after=None):
    """A /plan stub honoring /healthz; optionally dies after N requests."""
    count = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        if request.url.path == "/healthz":
            return httpx.Response(200, json={"status": "ok"})
        count["n"] += 1
        if fail_after is not None and count["n"] > fail_after:
            raise httpx.ConnectError("stub died")
        body = json.loads(request.content)
        if body.get("targets") == [0]:
            return httpx.Response(422, json={"detail": {"error": "UnreachableTargets"}})
        return httpx.Response(200, json={"routes": [], "total_distance_m": 0})

    return httpx.Client(transport=httpx.MockTransport(handler)), count


def test_runner_sample_accounting(graph, tmp_path):
    spec = WorkloadSpec(reps_per_cell=10, seed=1)
    reqs = generate_workload(spec, graph)
    client, count = _stub_client()
    samples = run_benchmark(
        "http://stub", reqs, "stubmode", 1, str(tmp_path / "out"), client=client
    )
    assert len(samples) == 350
    assert count["n"] == 351  # one warm-up request, unrecorded
    per_cell = {}
    for s in samples:
        per_cell[(s.sources, s.targets)] = per_cell.get((s.sources, s.targets), 0) + 1
    assert set(per_cell.values()) == {10}
    mode, replicas, from_csv = read_samples_csv(str(tmp_path / "out" / "samples.csv"))
    assert mode == "stubmode" and replicas == 1
    assert len(from_csv) == 350
    with open(tmp_path / "out" / "samples.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["mode", "replicas", "sources", "targets", "rep", "latency_ms", "outcome"]


def test_runner_endpoint_down_flushes_partial(graph, tmp_path):
    spec = WorkloadSpec(source_counts=[1], target_counts=[1, 2], reps_per_cell=5, seed=1)
    reqs = generate_workload(spec, graph)
    client, _ = _stub_client(fail_after=4)
    with pytest.raises(EndpointDown):
        run_benchmark("http://stub", reqs, "m", 1, str(tmp_path / "bad"), client=client)
    _, _, partial = read_samples_csv(str(tmp_path / "bad" / "samples.csv"))
    assert len(partial) == 3  # warm-up consumed one of the four allowed calls


def test_report_aggregates_match_recomputation(graph, tmp_path):
    spec = WorkloadSpec(source_counts=[1, 2], target_counts=[1, 2], reps_per_cell=6, seed=4)
    reqs = generate_workload(spec, graph)
    client, _ = _stub_client()
    out = str(tmp_path / "agg")
    samples = run_benchmark("http://stub", reqs, "m", 1, out, client=client)
    report = build_report(samples, "m", 1, workload_hash(reqs))
    write_report(report, out)
    _, _, from_csv = read_samples_csv(out + "/samples.csv")
    for cell in load_report(out)["cells"]:
        lat = [
            s.latency_ms
            for s in from_csv
            if s.sources == cell["sources"] and s.targets == cell["targets"] and s.outcome == "success"
        ]
        assert cell["samples"] == spec.reps_per_cell
        assert cell["mean_ms"] == pytest.approx(float(np.mean(lat)), rel=1e-9)
        assert cell["median_ms"] == pytest.approx(float(np.median(lat)), rel=1e-9)
        assert cell["p95_ms"] == pytest.approx(float(np.percentile(lat, 95)), rel=1e-9)
        assert cell["success_rate"] == 1.0


def test_compare_self_is_unit_speedup(graph, tmp_path):
    spec = WorkloadSpec(source_counts=[1], target_counts=[1, 2], reps_per_cell=4, seed=5)
    reqs = generate_workload(spec, graph)
    client, _ = _stub_client()
    out = str(tmp_path / "one")
    samples = run_benchmark("http://stub", reqs, "m", 1, out, client=client)
    write_report(build_report(samples, "m", 1, workload_hash(reqs)), out)
    result = compare_reports(out, out, str(tmp_path / "cmp"))
    assert all(row["speedup"] == 1.0 for row in result["cells"])
    plots = list((tmp_path / "cmp" / "plots").glob("*.svg"))
    assert len(plots) == 3  # one per source count, one per target count


def test_compare_workload_mismatch(graph, tmp_path):
    spec_a = WorkloadSpec(source_counts=[1], target_counts=[1], reps_per_cell=3, seed=1)
    spec_b = WorkloadSpec(source_counts=[1], target_counts=[1], reps_per_cell=3, seed=2)
    client, _ = _stub_client()
    dirs = []
    for name, spec in (("a", spec_a), ("b", spec_b)):
        reqs = generate_workload(spec, graph)
        out = str(tmp_path / name)
        samples = run_benchmark("http://stub", reqs, name, 1, out, client=client)
        write_report(build_report(samples, name, 1, workload_hash(reqs)), out)
        dirs.append(out)
    with pytest.raises(WorkloadMismatch):
        compare_reports(dirs[0], dirs[1], str(tmp_path / "cmp"))
