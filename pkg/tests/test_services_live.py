"""Tests that exercise real service processes over real sockets."""

import json
import os
import subprocess
import sys
import tempfile
import time

import httpx
import pytest

from gridplan.runtime.deploy import launch_microservices, launch_monolith, launch_service

NO_JIT = {"GRIDPLAN_DISABLE_JIT": "1"}


@pytest.fixture(scope="module")
def assets(tmp_path_factory):
    out = tmp_path_factory.mktemp("live_assets")
    subprocess.run(
        [sys.executable, "-m", "gridplan", "fixture-assets", "--out", str(out)],
        check=True,
        capture_output=True,
    )
    with open(out / "meta.json") as fh:
        meta = json.load(fh)
    return meta


def test_bind_error_on_occupied_port(assets):
    svc = launch_service("monolith", {"graph_file": assets["graph"]}, env_extra=NO_JIT)
    try:
        port = int(svc.url.rsplit(":", 1)[1])
        fd, cfg_path = tempfile.mkstemp(suffix=".json")
        with os.fdopen(fd, "w") as fh:
            json.dump({"role": "monolith", "graph_file": assets["graph"], "listen_port": port}, fh)
        proc = subprocess.run(
            [sys.executable, "-m", "gridplan", "serve", "--config", cfg_path],
            capture_output=True,
            text=True,
            timeout=60,
        )
        os.unlink(cfg_path)
        assert proc.returncode == 13
        assert "bind error" in proc.stderr
    finally:
        svc.stop()


def test_config_error_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "gridplan", "serve", "--role", "solver"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 2
    assert "config error" in proc.stderr


def test_full_microservice_chain_matches_monolith(assets):
    """ingest -> graph -> pathfinder(GRAPH_URL) -> solver, vs the monolith."""
    services = []
    try:
        ingest = launch_service("ingest", {"store_path": assets["store"]}, env_extra=NO_JIT)
        services.append(ingest)
        graph = launch_service(
            "graph", {"upstreams": {"ingest": [ingest.url]}}, env_extra=NO_JIT
        )
        services.append(graph)
        pathfinder = launch_service(
            "pathfinder", {"upstreams": {"graph": [graph.url]}}, env_extra=NO_JIT
        )
        services.append(pathfinder)
        solver = launch_service(
            "solver", {"upstreams": {"pathfinder": [pathfinder.url]}}, env_extra=NO_JIT
        )
        services.append(solver)

        towers = httpx.get(ingest.url + "/towers", timeout=10).json()
        req = {
            "uavs": [{"lat": towers[0]["lat"], "lon": towers[0]["lon"]}],
            "targets": [towers[20]["id"], towers[120]["id"], towers[180]["id"]],
            "seed": 0,
        }
        micro_resp = httpx.post(solver.url + "/plan", json=req, timeout=120)
        assert micro_resp.status_code == 200

        with launch_monolith(assets["graph"], store_path=assets["store"], env_extra=NO_JIT) as mono:
            mono_resp = httpx.post(mono.url + "/plan", json=req, timeout=120)
        assert mono_resp.status_code == 200
        assert micro_resp.content == mono_resp.content
    finally:
        for svc in reversed(services):
            svc.stop()


def test_statelessness_after_kill_and_restart(assets):
    dep = launch_monolith(assets["graph"], env_extra=NO_JIT)
    url = dep.url
    req = {"uavs": [{"lat": 55.3, "lon": 9.2}], "targets": [1005], "seed": 0}
    first = httpx.post(url + "/plan", json=req, timeout=60)
    assert first.status_code == 200
    dep.services[0].process.kill()
    dep.services[0].process.wait(timeout=10)

    dep2 = launch_monolith(assets["graph"], env_extra=NO_JIT)
    try:
        assert httpx.get(dep2.url + "/healthz", timeout=10).status_code == 200
        second = httpx.post(dep2.url + "/plan", json=req, timeout=60)
        assert second.content == first.content  # no persisted request state
    finally:
        dep2.stop()


def test_pathfinder_with_graph_file_needs_no_graph_service(assets):
    svc = launch_service("pathfinder", {"graph_file": assets["graph"]}, env_extra=NO_JIT)
    try:
        assert httpx.get(svc.url + "/healthz", timeout=10).status_code == 200
    finally:
        svc.stop()


def test_jit_enabled_service_smoke(assets):
    # default env keeps the numba path on; answers must match the pure path
    svc = launch_service("pathfinder", {"graph_file": assets["graph"]})
    svc_pure = launch_service("pathfinder", {"graph_file": assets["graph"]}, env_extra=NO_JIT)
    try:
        body = {"source": {"node": 1000}, "target": {"node": 1100}}
        a = httpx.post(svc.url + "/path", json=body, timeout=60).json()
        b = httpx.post(svc_pure.url + "/path", json=body, timeout=60).json()
        assert a["node_ids"] == b["node_ids"]
        assert a["total_cost_m"] == pytest.approx(b["total_cost_m"], rel=1e-12)
    finally:
        svc.stop()
        svc_pure.stop()
