"""Deployed-system conformance check against golden request/plan pairs.

Mirrors the pipeline test stage: the same requests are sent to a live
deployment and answers are compared field by field (distances within 1 m
absolute, orders exact). Readiness is polled rather than waiting a fixed
delay.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import httpx

from ..errors import ReadinessTimeout

GOLDEN_SCHEMA_VERSION = 1
DISTANCE_TOLERANCE_M = 1.0


@dataclass
class CaseResult:
    index: int
    ok: bool
    diffs: list[str] = field(default_factory=list)


@dataclass
class ConformanceReport:
    cases: list[CaseResult]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.cases)


def wait_ready(base_url: str, timeout_s: float = 30.0, client: httpx.Client | None = None) -> None:
    c = client or httpx
    deadline = time.monotonic() + timeout_s
    last = "no attempt"
    while time.monotonic() < deadline:
        try:
            resp = c.get(base_url.rstrip("/") + "/healthz", timeout=5.0)
            if resp.status_code == 200:
                return
            last = f"HTTP {resp.status_code}"
        except httpx.HTTPError as exc:
            last = repr(exc)
        time.sleep(0.15)
    raise ReadinessTimeout(f"{base_url} not ready within {timeout_s}s (last: {last})")


def generate_golden(base_url: str, requests: list[dict], client: httpx.Client | None = None) -> dict:
    """Record plan responses for each request from a trusted deployment."""
    c = client or httpx
    wait_ready(base_url, client=client)
    cases = []
    for req in requests:
        resp = c.post(base_url.rstrip("/") + "/plan", json=req, timeout=120.0)
        resp.raise_for_status()
        cases.append({"request": req, "expected": resp.json()})
    return {"schema_version": GOLDEN_SCHEMA_VERSION, "cases": cases}


def _diff_plans(expected: dict, got: dict, prefix: str = "") -> list[str]:
    diffs: list[str] = []
    exp_routes = expected.get("routes", [])
    got_routes = got.get("routes", [])
    if len(exp_routes) != len(got_routes):
        diffs.append(f"{prefix}routes: expected {len(exp_routes)} routes, got {len(got_routes)}")
        return diffs
    for i, (er, gr) in enumerate(zip(exp_routes, got_routes)):
        at = f"{prefix}routes[{i}]."
        if er.get("uav_index") != gr.get("uav_index"):
            diffs.append(f"{at}uav_index: expected {er.get('uav_index')}, got {gr.get('uav_index')}")
        if er.get("visit_order") != gr.get("visit_order"):
            diffs.append(f"{at}visit_order: expected {er.get('visit_order')}, got {gr.get('visit_order')}")
        if er.get("waypoint_node_ids") != gr.get("waypoint_node_ids"):
            diffs.append(f"{at}waypoint_node_ids: sequences differ")
        if abs(er.get("distance_m", 0) - gr.get("distance_m", 0)) > DISTANCE_TOLERANCE_M:
            diffs.append(
                f"{at}distance_m: expected {er.get('distance_m')}, got {gr.get('distance_m')} "
                f"(tolerance {DISTANCE_TOLERANCE_M} m)"
            )
    if abs(expected.get("total_distance_m", 0) - got.get("total_distance_m", 0)) > DISTANCE_TOLERANCE_M:
        diffs.append(
            f"{prefix}total_distance_m: expected {expected.get('total_distance_m')}, "
            f"got {got.get('total_distance_m')} (tolerance {DISTANCE_TOLERANCE_M} m)"
        )
    return diffs


def run_conformance(
    base_url: str,
    golden: dict,
    client: httpx.Client | None = None,
    readiness_timeout_s: float = 60.0,
) -> ConformanceReport:
    if golden.get("schema_version") != GOLDEN_SCHEMA_VERSION:
        raise ValueError(f"golden schema_version {golden.get('schema_version')} unsupported")
    c = client or httpx
    wait_ready(base_url, timeout_s=readiness_timeout_s, client=client)
    results = []
    for i, case in enumerate(golden["cases"]):
        try:
            resp = c.post(base_url.rstrip("/") + "/plan", json=case["request"], timeout=120.0)
        except httpx.HTTPError as exc:
            results.append(CaseResult(i, False, [f"transport failure: {exc!r}"]))
            continue
        if resp.status_code != 200:
            results.append(CaseResult(i, False, [f"HTTP {resp.status_code}: {resp.text[:200]}"]))
            continue
        diffs = _diff_plans(case["expected"], resp.json())
        results.append(CaseResult(i, not diffs, diffs))
    return ConformanceReport(results)


def load_golden(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_golden(golden: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(golden, fh, indent=1)
