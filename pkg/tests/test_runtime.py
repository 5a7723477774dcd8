import json
import threading

import httpx
import pytest
from fastapi.testclient import TestClient

from gridplan.errors import AllReplicasFailed, ConfigError
from gridplan.geo import GeoPoint, haversine_distance
from gridplan.graphbuild import Edge, InfrastructureGraph, serialize_graph, write_graph_file
from gridplan.runtime.apps import (
    create_graph_app,
    create_ingest_app,
    create_monolith_app,
    create_pathfinder_app,
    create_solver_app,
)
from gridplan.runtime.client import RoundRobinClient
from gridplan.runtime.config import ServiceConfig, load_config


# --- config ---------------------------------------------------------------

def test_config_file_and_env_override(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"role": "pathfinder", "graph_file": "/a.json", "seed": 5}))
    cfg = load_config(str(cfg_file), env={"SEED": "9", "SNAP_RADIUS_M": "1234.5"})
    assert cfg.role == "pathfinder"
    assert cfg.seed == 9
    assert cfg.snap_radius_m == 1234.5
    assert cfg.graph_file == "/a.json"


def test_config_upstream_env_lists():
    cfg = load_config(env={"ROLE": "solver", "PATHFINDER_URLS": "http://a:1, http://b:2"})
    assert cfg.upstreams["pathfinder"] == ["http://a:1", "http://b:2"]
    cfg.validate()


def test_solver_without_upstreams_is_config_error():
    cfg = ServiceConfig(role="solver")
    with pytest.raises(ConfigError):
        cfg.validate()


def test_unknown_config_key_rejected(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"role": "ingest", "no_such_key": 1}))
    with pytest.raises(ConfigError):
        load_config(str(cfg_file))


# --- round robin ----------------------------------------------------------

def _transport(handlers):
    calls = []

    def handler(request: httpx.Request) -> httpx.Response:
        calls.append(str(request.url))
        host = request.url.host
        return handlers[host](request)

    return httpx.MockTransport(handler), calls


def test_round_robin_cyclic_distribution():
    counts = {"a": 0, "b": 0, "c": 0}

    def ok(name):
        def handle(request):
            counts[name] += 1
            return httpx.Response(200, json={"replica": name})
        return handle

    transport, _ = _transport({"a": ok("a"), "b": ok("b"), "c": ok("c")})
    client = RoundRobinClient(["http://a", "http://b", "http://c"], client=httpx.Client(transport=transport))
    for _ in range(6):
        client.get("/x")
    assert counts == {"a": 2, "b": 2, "c": 2}


def test_round_robin_failover_covers_dead_replica():
    def ok(request):
        return httpx.Response(200, json={})

    def dead(request):
        raise httpx.ConnectError("down")

    transport, _ = _transport({"a": ok, "b": dead, "c": ok})
    client = RoundRobinClient(["http://a", "http://b", "http://c"], client=httpx.Client(transport=transport))
    statuses = [client.get("/x").status_code for _ in range(6)]
    assert statuses == [200] * 6  # zero failed user-visible calls


def test_round_robin_all_replicas_down():
    def dead(request):
        raise httpx.ConnectError("down")

    transport, _ = _transport({"a": dead, "b": dead})
    client = RoundRobinClient(["http://a", "http://b"], client=httpx.Client(transport=transport))
    with pytest.raises(AllReplicasFailed):
        client.get("/x")


# --- apps via TestClient ----------------------------------------------------

@pytest.fixture(scope="module")
def fixture_assets(tmp_path_factory):
    from gridplan.geo import BoundingBox
    from gridplan.graphbuild import build_graph
    from gridplan.store import ingest, persist
    from gridplan.cli import fixture_path

    out = tmp_path_factory.mktemp("assets")
    fixture = fixture_path()
    store = ingest(BoundingBox(54.0, 8.0, 57.0, 12.0), fixture, fixture, fixture)
    store_dir = str(out / "store")
    persist(store, store_dir)
    graph = build_graph(store)
    graph_file = str(out / "graph.json")
    write_graph_file(graph, graph_file)
    return {"store": store_dir, "graph_file": graph_file, "graph": graph, "infra": store}


def test_ingest_app_endpoints(fixture_assets):
    app = create_ingest_app(ServiceConfig(role="ingest", store_path=fixture_assets["store"]))
    client = TestClient(app)
    assert client.get("/healthz").status_code == 200
    towers = client.get("/towers").json()
    assert len(towers) == 200
    boxed = client.get("/towers", params={"bbox": "55.29,9.19,55.31,9.25"}).json()
    assert 0 < len(boxed) < 200
    assert client.get("/towers", params={"bbox": "bad"}).status_code == 400
    lines = client.get("/powerlines").json()
    assert {l["id"] for l in lines} == {2000, 2001, 2002, 2003}
    assert len(client.get("/railways").json()) == 20
    bridges = client.get("/bridges").json()
    assert all(b["node_refs"][0] == b["node_refs"][-1] for b in bridges)


def test_graph_app_serves_and_rebuilds(fixture_assets):
    app = create_graph_app(ServiceConfig(role="graph", store_path=fixture_assets["store"]))
    client = TestClient(app)
    payload = client.get("/graph").content
    assert payload == serialize_graph(fixture_assets["graph"])
    resp = client.post("/graph/rebuild")
    assert resp.status_code == 202
    job = resp.json()["job_id"]
    for _ in range(100):
        status = client.get(f"/graph/rebuild/{job}").json()["status"]
        if status != "running":
            break
        import time

        time.sleep(0.05)
    assert status == "done"
    assert client.get("/graph/rebuild/nope").status_code == 404


def test_graph_app_from_upstream_ingest(fixture_assets, monkeypatch):
    ingest_app = create_ingest_app(ServiceConfig(role="ingest", store_path=fixture_assets["store"]))
    ingest_client = TestClient(ingest_app)

    def handler(request: httpx.Request) -> httpx.Response:
        r = ingest_client.get(request.url.path)
        return httpx.Response(r.status_code, content=r.content)

    transport = httpx.MockTransport(handler)
    monkeypatch.setattr(
        "gridplan.runtime.apps.RoundRobinClient",
        lambda urls, **kw: RoundRobinClient(urls, client=httpx.Client(transport=transport)),
    )
    app = create_graph_app(
        ServiceConfig(role="graph", upstreams={"ingest": ["http://ingest"]})
    )
    client = TestClient(app)
    payload = client.get("/graph").content
    # towers-service-fed build matches the local-store build exactly
    assert payload == serialize_graph(fixture_assets["graph"])


def test_pathfinder_app_cache_once_and_paths(fixture_assets):
    fetches = {"count": 0}
    graph_payload = serialize_graph(fixture_assets["graph"])

    def handler(request: httpx.Request) -> httpx.Response:
        fetches["count"] += 1
        return httpx.Response(200, content=graph_payload)

    client_httpx = httpx.Client(transport=httpx.MockTransport(handler))
    app = create_pathfinder_app(
        ServiceConfig(role="pathfinder", upstreams={"graph": ["http://graph"]}),
        graph_client=client_httpx,
    )
    client = TestClient(app)
    ids = sorted(fixture_assets["graph"].nodes)
    for _ in range(2):
        resp = client.post("/path", json={"source": {"node": ids[0]}, "target": {"node": ids[5]}})
        assert resp.status_code == 200
    assert fetches["count"] == 1  # fetched exactly once
    body = resp.json()
    assert body["total_cost_m"] == pytest.approx(sum(body["segment_costs_m"]), rel=1e-6)

    # snap + identity: a point 1 m from a node, to that node, costs 0
    node = fixture_assets["graph"].nodes[ids[3]]
    resp = client.post(
        "/path",
        json={"source": {"point": {"lat": node.lat + 1e-5, "lon": node.lon}}, "target": {"node": ids[3]}},
    )
    assert resp.status_code == 200
    assert resp.json()["total_cost_m"] == 0.0

    assert client.post("/path", json={"source": {"node": 1}, "target": {"node": 999999}}).status_code == 404
    far = {"point": {"lat": 56.9, "lon": 11.9}}
    resp = client.post("/path", json={"source": far, "target": {"node": ids[0]}})
    assert resp.status_code == 422
    assert resp.json()["detail"]["error"] == "NoNodeInRange"

    assert client.post("/cache/invalidate").status_code == 200
    client.post("/path", json={"source": {"node": ids[0]}, "target": {"node": ids[5]}})
    assert fetches["count"] == 2  # invalidate is the explicit escape hatch


def test_pathfinder_unavailable_graph_service(fixture_assets):
    def handler(request: httpx.Request) -> httpx.Response:
        raise httpx.ConnectError("graph service down")

    client_httpx = httpx.Client(transport=httpx.MockTransport(handler))
    app = create_pathfinder_app(
        ServiceConfig(role="pathfinder", upstreams={"graph": ["http://graph"]}),
        graph_client=client_httpx,
    )
    client = TestClient(app)
    resp = client.post("/path", json={"source": {"node": 1}, "target": {"node": 2}})
    assert resp.status_code == 503
    assert resp.json()["detail"]["error"] == "GraphUnavailable"


def test_monolith_plan_and_graph_endpoints(fixture_assets):
    cfg = ServiceConfig(
        role="monolith", graph_file=fixture_assets["graph_file"], store_path=fixture_assets["store"]
    )
    app = create_monolith_app(cfg)
    client = TestClient(app)
    assert client.get("/healthz").status_code == 200
    assert len(client.get("/towers").json()) == 200
    assert client.get("/graph").content == serialize_graph(fixture_assets["graph"])
    ids = sorted(fixture_assets["graph"].nodes)
    start = fixture_assets["graph"].nodes[ids[0]]
    resp = client.post(
        "/plan",
        json={"uavs": [{"lat": start.lat, "lon": start.lon}], "targets": ids[10:12], "seed": 0},
    )
    assert resp.status_code == 200
    plan = resp.json()
    assert sorted(t for r in plan["routes"] for t in r["visit_order"]) == sorted(ids[10:12])

    # unknown target surfaces as 404-class error
    resp = client.post(
        "/plan", json={"uavs": [{"lat": start.lat, "lon": start.lon}], "targets": [999999]}
    )
    assert resp.status_code == 404
