"""FastAPI applications for each service role and the monolith.

The same planning code serves both deployment modes: the solver app fans
out pair requests to pathfinder replicas, while the monolith calls the
pathfinding functions in-process, strictly one pair at a time. Plan
responses are serialized through one canonical encoder so that both modes
return byte-identical JSON for identical inputs.
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
import uuid

from fastapi import Body, FastAPI, HTTPException, Query, Request, Response

from .. import solver as solver_mod
from ..errors import (
    ConfigError,
    GraphUnavailable,
    GridplanError,
    NoNodeInRange,
    PathServiceUnavailable,
    UnknownNode,
    Unreachable,
    UnreachableTargets,
)
from ..fanout import ReplicaPool
from ..geo import BoundingBox, GeoPoint
from ..graphbuild import build_graph, read_graph_file, serialize_graph
from ..osm import BridgePolygon, OsmNode, PowerLine
from ..pathfind import GraphCache, astar_shortest_path, resolve_endpoint
from ..store import InfraStore, load as load_store
from .client import RoundRobinClient
from .config import ServiceConfig
from .metrics import CONTENT_TYPE, MetricsMiddleware, MetricsRegistry

log = logging.getLogger(__name__)


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(
        content=json.dumps(payload, separators=(",", ":")),
        status_code=status_code,
        media_type="application/json",
    )


def _error(status: int, name: str, message: str, **extra):
    return HTTPException(status_code=status, detail={"error": name, "message": message, **extra})


def _node_wire(n: OsmNode) -> dict:
    return {"id": n.id, "lat": n.location.lat, "lon": n.location.lon, "tags": n.tags}


def _line_wire(l: PowerLine) -> dict:
    return {"id": l.id, "node_refs": l.node_refs, "tags": l.tags}


def _bridge_wire(b: BridgePolygon) -> dict:
    return {"id": b.id, "node_refs": b.node_refs}


def _base_app(service_name: str) -> tuple[FastAPI, MetricsRegistry]:
    app = FastAPI(title=f"gridplan-{service_name}", docs_url=None, redoc_url=None)
    registry = MetricsRegistry(service_name)
    app.state.metrics = registry

    @app.get("/metrics")
    def metrics() -> Response:
        return Response(content=registry.render(), media_type=CONTENT_TYPE)

    return app, registry


def _finish(app: FastAPI, registry: MetricsRegistry):
    return MetricsMiddleware(app, registry)


def _mount_store_endpoints(app: FastAPI, store: InfraStore) -> None:
    @app.get("/towers")
    def towers(bbox: str | None = Query(default=None)) -> Response:
        if bbox:
            try:
                box = BoundingBox.parse(bbox)
            except ValueError as exc:
                raise _error(400, "BadBBox", str(exc))
            selected = store.towers_in_bbox(box)
        else:
            selected = list(store.towers.values())
        return _json_response([_node_wire(n) for n in selected])

    @app.get("/powerlines")
    def powerlines() -> Response:
        return _json_response([_line_wire(l) for l in store.power_lines.values()])

    @app.get("/railways")
    def railways() -> Response:
        return _json_response([_node_wire(n) for n in store.railway_nodes.values()])

    @app.get("/bridges")
    def bridges() -> Response:
        return _json_response([_bridge_wire(b) for b in store.bridges.values()])


def create_ingest_app(cfg: ServiceConfig):
    app, registry = _base_app("ingest")
    store = load_store(cfg.store_path)
    app.state.store = store
    _mount_store_endpoints(app, store)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "towers": len(store.towers)}

    return _finish(app, registry)


def _store_from_upstream(urls: list[str]) -> InfraStore:
    client = RoundRobinClient(urls)
    towers = [
        OsmNode(d["id"], GeoPoint(d["lat"], d["lon"]), dict(d["tags"]))
        for d in client.get("/towers").json()
    ]
    lines = [
        PowerLine(d["id"], [int(r) for r in d["node_refs"]], dict(d["tags"]))
        for d in client.get("/powerlines").json()
    ]
    railway = [
        OsmNode(d["id"], GeoPoint(d["lat"], d["lon"]), dict(d["tags"]))
        for d in client.get("/railways").json()
    ]
    bridges = [
        BridgePolygon(d["id"], [int(r) for r in d["node_refs"]])
        for d in client.get("/bridges").json()
    ]
    del bridges  # ring node locations are not exposed over HTTP; bridge
    # merging therefore requires a local store_path rather than an upstream
    # plain line nodes carry no coordinates the graph needs (they are cut
    # from the ref sequences), so referenced ids resolve as placeholders
    tower_ids = {t.id for t in towers}
    extra_ids = sorted({r for l in lines for r in l.node_refs if r not in tower_ids})
    placeholders = [OsmNode(nid, GeoPoint(0.0, 0.0)) for nid in extra_ids]
    return InfraStore.from_collections(
        towers=towers, line_nodes=placeholders, power_lines=lines,
        railway_nodes=railway, bridges=[],
    )


def create_graph_app(cfg: ServiceConfig):
    app, registry = _base_app("graph")
    state = app.state
    state.graph_bytes = None
    state.jobs: dict[str, str] = {}
    state.lock = threading.Lock()

    def _build_payload() -> bytes:
        if cfg.graph_file:
            return serialize_graph(read_graph_file(cfg.graph_file))
        if cfg.store_path:
            store = load_store(cfg.store_path)
        else:
            store = _store_from_upstream(cfg.upstreams["ingest"])
        graph = build_graph(
            store,
            penalty_factor=cfg.penalty_factor,
            indirect_radius_m=cfg.indirect_radius_m,
            include_bridges=cfg.include_bridges,
        )
        return serialize_graph(graph)

    state.graph_bytes = _build_payload()

    def _rebuild(job_id: str) -> None:
        try:
            payload = _build_payload()
            with state.lock:
                state.graph_bytes = payload
                state.jobs[job_id] = "done"
        except Exception as exc:  # pragma: no cover - surfaced via job status
            log.exception("graph rebuild failed")
            with state.lock:
                state.jobs[job_id] = f"failed: {exc}"

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/graph")
    def graph() -> Response:
        with state.lock:
            payload = state.graph_bytes
        return Response(content=payload, media_type="application/json")

    @app.post("/graph/rebuild", status_code=202)
    def rebuild() -> dict:
        job_id = uuid.uuid4().hex[:12]
        with state.lock:
            state.jobs[job_id] = "running"
        threading.Thread(target=_rebuild, args=(job_id,), daemon=True).start()
        return {"job_id": job_id, "status": "running"}

    @app.get("/graph/rebuild/{job_id}")
    def rebuild_status(job_id: str) -> dict:
        with state.lock:
            status = state.jobs.get(job_id)
        if status is None:
            raise _error(404, "UnknownJob", f"no rebuild job {job_id}")
        return {"job_id": job_id, "status": status}

    if cfg.refresh_interval_s > 0:
        stop = threading.Event()
        state.refresh_stop = stop

        def _refresher():
            while not stop.wait(cfg.refresh_interval_s):
                _rebuild(uuid.uuid4().hex[:12])

        threading.Thread(target=_refresher, daemon=True).start()

    return _finish(app, registry)


_SNAP_CACHE_MAX = 8192


def _resolve_memo(graph, spec, snap_radius_m: float, memo: dict) -> int:
    # snapping the same point is pure per graph; the memo is dropped with it
    if isinstance(spec, dict) and "point" in spec:
        key = (float(spec["point"]["lat"]), float(spec["point"]["lon"]))
        hit = memo.get(key)
        if hit is None:
            if len(memo) >= _SNAP_CACHE_MAX:
                memo.clear()
            hit = memo[key] = resolve_endpoint(graph, spec, snap_radius_m)
        return hit
    return resolve_endpoint(graph, spec, snap_radius_m)


def _run_path_request(graph, body: dict, snap_radius_m: float, memo: dict) -> Response:
    try:
        source = _resolve_memo(graph, body.get("source"), snap_radius_m, memo)
        target = _resolve_memo(graph, body.get("target"), snap_radius_m, memo)
        result = astar_shortest_path(graph, source, target)
    except UnknownNode as exc:
        raise _error(404, "UnknownNode", str(exc))
    except Unreachable as exc:
        raise _error(422, "Unreachable", str(exc))
    except NoNodeInRange as exc:
        raise _error(422, "NoNodeInRange", str(exc))
    except ValueError as exc:
        raise _error(400, "BadRequest", str(exc))
    return _json_response(result.to_json_dict())


def create_pathfinder_app(cfg: ServiceConfig, graph_client=None):
    app, registry = _base_app("pathfinder")
    cache = GraphCache(
        graph_file=cfg.graph_file,
        graph_urls=cfg.upstreams.get("graph"),
        client=graph_client,
    )
    app.state.graph_cache = cache

    @app.get("/healthz")
    def healthz() -> dict:
        # readiness means the graph cache is loaded; with an upstream graph
        # service this triggers the one-and-only fetch
        if not cache.loaded:
            try:
                cache.get()
            except GraphUnavailable as exc:
                raise _error(503, "GraphUnavailable", str(exc))
        return {"status": "ok", "nodes": len(cache.get().nodes)}

    snap_memo: dict = {}

    @app.post("/path")
    def path(body: dict = Body(...)) -> Response:
        try:
            graph = cache.get()
        except GraphUnavailable as exc:
            raise _error(503, "GraphUnavailable", str(exc))
        return _run_path_request(graph, body, cfg.snap_radius_m, snap_memo)

    @app.post("/cache/invalidate")
    def invalidate() -> dict:
        cache.invalidate()
        snap_memo.clear()
        return {"status": "invalidated"}

    return _finish(app, registry)


def _plan_response(plan: solver_mod.MissionPlan) -> Response:
    return _json_response(plan.to_json_dict())


def _map_plan_error(exc: Exception) -> HTTPException:
    if isinstance(exc, UnreachableTargets):
        return _error(422, "UnreachableTargets", str(exc), unreachable=exc.target_ids)
    if isinstance(exc, NoNodeInRange):
        return _error(422, "NoNodeInRange", str(exc))
    if isinstance(exc, UnknownNode):
        return _error(404, "UnknownNode", str(exc))
    if isinstance(exc, PathServiceUnavailable):
        return _error(503, "PathServiceUnavailable", str(exc))
    if isinstance(exc, (ValueError, KeyError, TypeError)):
        return _error(400, "BadRequest", f"invalid mission request: {exc}")
    raise exc


def create_solver_app(cfg: ServiceConfig):
    app, registry = _base_app("solver")
    app.state.pool = None

    def _pool() -> ReplicaPool:
        # created lazily so the pool binds to the serving event loop
        if app.state.pool is None:
            app.state.pool = ReplicaPool(cfg.upstreams["pathfinder"], cfg.max_in_flight)
        return app.state.pool

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/plan")
    async def plan(body: dict = Body(...)) -> Response:
        try:
            req = solver_mod.MissionRequest.from_json_dict(body)
            provider = solver_mod.HttpPathProvider(_pool())
            plan = await solver_mod.plan_mission_async(
                req, provider, max_in_flight=cfg.max_in_flight
            )
        except Exception as exc:
            raise _map_plan_error(exc)
        return _plan_response(plan)

    return _finish(app, registry)


def create_monolith_app(cfg: ServiceConfig):
    app, registry = _base_app("monolith")

    store = load_store(cfg.store_path) if cfg.store_path else None
    if cfg.graph_file:
        graph = read_graph_file(cfg.graph_file)
    else:
        graph = build_graph(
            store,
            penalty_factor=cfg.penalty_factor,
            indirect_radius_m=cfg.indirect_radius_m,
            include_bridges=cfg.include_bridges,
        )
    app.state.graph = graph

    if store is not None:
        _mount_store_endpoints(app, store)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "nodes": len(graph.nodes)}

    @app.get("/graph")
    def graph_endpoint() -> Response:
        return Response(content=serialize_graph(graph), media_type="application/json")

    snap_memo: dict = {}

    @app.post("/path")
    def path(body: dict = Body(...)) -> Response:
        return _run_path_request(graph, body, cfg.snap_radius_m, snap_memo)

    @app.post("/plan")
    def plan(body: dict = Body(...)) -> Response:
        # in-process provider, one pair in flight: the synchronous monolith
        try:
            req = solver_mod.MissionRequest.from_json_dict(body)
            result = solver_mod.plan_mission(req, graph, snap_radius_m=cfg.snap_radius_m)
        except Exception as exc:
            raise _map_plan_error(exc)
        return _plan_response(result)

    return _finish(app, registry)


_FACTORIES = {
    "ingest": create_ingest_app,
    "graph": create_graph_app,
    "pathfinder": create_pathfinder_app,
    "solver": create_solver_app,
    "monolith": create_monolith_app,
}


def create_app(cfg: ServiceConfig):
    cfg.validate()
    if cfg.role not in _FACTORIES:
        raise ConfigError(f"unknown role {cfg.role!r}")
    return _FACTORIES[cfg.role](cfg)
