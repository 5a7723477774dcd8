"""Closed-loop benchmark runner: one request in flight, wall-clock timing."""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass

import httpx

from ..errors import EndpointDown
from ..runtime.conformance import wait_ready
from .workload import BenchRequest, workload_hash

CSV_COLUMNS = ["mode", "replicas", "sources", "targets", "rep", "latency_ms", "outcome"]

SUCCESS = "success"
UNREACHABLE = "unreachable"
ERROR = "error"


@dataclass
class BenchSample:
    sources: int
    targets: int
    rep: int
    latency_ms: float
    outcome: str


def run_benchmark(
    endpoint: str,
    requests: list[BenchRequest],
    mode_label: str,
    replicas: int,
    out_dir: str,
    warmup: bool = True,
    client: httpx.Client | None = None,
    readiness_timeout_s: float = 120.0,
) -> list[BenchSample]:
    """Send the workload one request at a time and persist samples.

    Unreachable-target answers are recorded as outcome=unreachable, not
    failures. A transport-level failure flushes the partial CSV and raises
    EndpointDown.
    """
    os.makedirs(out_dir, exist_ok=True)
    own_client = client is None
    c = client or httpx.Client(timeout=600.0)
    samples: list[BenchSample] = []
    url = endpoint.rstrip("/") + "/plan"
    try:
        wait_ready(endpoint, timeout_s=readiness_timeout_s, client=c)
        if warmup and requests:
            # warm pathfinder graph caches before measuring
            try:
                c.post(url, json=requests[0].payload, timeout=600.0)
            except httpx.HTTPError as exc:
                _flush(out_dir, mode_label, replicas, samples, requests)
                raise EndpointDown(f"warm-up request failed: {exc!r}") from exc
        for req in requests:
            start = time.perf_counter()
            try:
                resp = c.post(url, json=req.payload, timeout=600.0)
            except httpx.HTTPError as exc:
                _flush(out_dir, mode_label, replicas, samples, requests)
                raise EndpointDown(f"endpoint failed mid-run: {exc!r}") from exc
            # microsecond precision, matching the CSV so aggregates recompute exactly
            latency_ms = round((time.perf_counter() - start) * 1000.0, 3)
            if resp.status_code == 200:
                outcome = SUCCESS
            elif resp.status_code == 422:
                outcome = UNREACHABLE
            else:
                outcome = ERROR
            samples.append(BenchSample(req.sources, req.targets, req.rep, latency_ms, outcome))
    finally:
        if own_client:
            c.close()
    _flush(out_dir, mode_label, replicas, samples, requests)
    return samples


def _flush(out_dir, mode_label, replicas, samples, requests) -> None:
    write_samples_csv(os.path.join(out_dir, "samples.csv"), mode_label, replicas, samples)
    meta = {
        "mode": mode_label,
        "replicas": replicas,
        "workload_hash": workload_hash(requests),
        "requests": len(requests),
        "completed": len(samples),
    }
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)


def write_samples_csv(path: str, mode_label: str, replicas: int, samples: list[BenchSample]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for s in samples:
            writer.writerow(
                [mode_label, replicas, s.sources, s.targets, s.rep, f"{s.latency_ms:.3f}", s.outcome]
            )


def read_samples_csv(path: str) -> tuple[str, int, list[BenchSample]]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        samples = []
        mode, replicas = "", 1
        for row in reader:
            mode = row["mode"]
            replicas = int(row["replicas"])
            samples.append(
                BenchSample(
                    sources=int(row["sources"]),
                    targets=int(row["targets"]),
                    rep=int(row["rep"]),
                    latency_ms=float(row["latency_ms"]),
                    outcome=row["outcome"],
                )
            )
    return mode, replicas, samples
