"""Embedded, file-backed infrastructure store with a uniform grid index.

Replaces the cloud document database: one JSON document per collection plus
a manifest, and a lat/lon grid (0.01 deg cells) over tower locations that
answers radius queries with exactly the same result set a linear scan
would produce.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import IoError, SchemaVersionMismatch
from .geo import BoundingBox, GeoPoint
from .osm import BridgePolygon, OsmNode, PowerLine

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
GRID_CELL_DEG = 0.01

# meters per degree of latitude on the R=6371km sphere
_M_PER_DEG = kernels.EARTH_RADIUS_M * math.pi / 180.0


class GridIndex:
    """Uniform lat/lon binning of tower locations for radius queries."""

    def __init__(self, towers: list[OsmNode], cell_deg: float = GRID_CELL_DEG):
        self.cell_deg = cell_deg
        self.cells: dict[tuple[int, int], list[int]] = {}
        ordered = sorted(towers, key=lambda t: t.id)
        self._ids = np.array([t.id for t in ordered], dtype=np.int64)
        self._lats = np.array([t.location.lat for t in ordered])
        self._lons = np.array([t.location.lon for t in ordered])
        for i, t in enumerate(ordered):
            key = self._key(t.location.lat, t.location.lon)
            self.cells.setdefault(key, []).append(i)

    def _key(self, lat: float, lon: float) -> tuple[int, int]:
        return (math.floor(lat / self.cell_deg), math.floor(lon / self.cell_deg))

    def candidates(self, p: GeoPoint, radius_m: float) -> np.ndarray:
        """Indices of towers in every cell overlapping the radius box."""
        dlat = radius_m / _M_PER_DEG
        coslat = max(math.cos(math.radians(p.lat)), 1e-9)
        dlon = radius_m / (_M_PER_DEG * coslat)
        lo_i = math.floor((p.lat - dlat) / self.cell_deg)
        hi_i = math.floor((p.lat + dlat) / self.cell_deg)
        lo_j = math.floor((p.lon - dlon) / self.cell_deg)
        hi_j = math.floor((p.lon + dlon) / self.cell_deg)
        out: list[int] = []
        for i in range(lo_i, hi_i + 1):
            for j in range(lo_j, hi_j + 1):
                out.extend(self.cells.get((i, j), ()))
        return np.array(sorted(out), dtype=np.int64)

    def query_radius(self, p: GeoPoint, radius_m: float) -> list[tuple[float, int]]:
        """(distance, tower_id) pairs within radius, sorted by (distance, id)."""
        cand = self.candidates(p, radius_m)
        if cand.size == 0:
            return []
        dists = kernels.active.haversine_many(
            math.radians(p.lat),
            math.radians(p.lon),
            np.radians(self._lats[cand]),
            np.radians(self._lons[cand]),
        )
        hits = [
            (float(dists[k]), int(self._ids[cand[k]]))
            for k in range(cand.size)
            if dists[k] <= radius_m
        ]
        hits.sort()
        return hits


@dataclass
class InfraStore:
    towers: dict[int, OsmNode] = field(default_factory=dict)
    line_nodes: dict[int, OsmNode] = field(default_factory=dict)
    power_lines: dict[int, PowerLine] = field(default_factory=dict)
    railway_nodes: dict[int, OsmNode] = field(default_factory=dict)
    bridges: dict[int, BridgePolygon] = field(default_factory=dict)
    _grid: GridIndex | None = None

    @classmethod
    def from_collections(
        cls,
        towers: list[OsmNode],
        line_nodes: list[OsmNode] = (),
        power_lines: list[PowerLine] = (),
        railway_nodes: list[OsmNode] = (),
        bridges: list[BridgePolygon] = (),
    ) -> "InfraStore":
        store = cls(
            towers={t.id: t for t in sorted(towers, key=lambda x: x.id)},
            line_nodes={n.id: n for n in sorted(line_nodes, key=lambda x: x.id)},
            power_lines={l.id: l for l in sorted(power_lines, key=lambda x: x.id)},
            railway_nodes={n.id: n for n in sorted(railway_nodes, key=lambda x: x.id)},
            bridges={b.id: b for b in sorted(bridges, key=lambda x: x.id)},
        )
        store.validate()
        return store

    def validate(self) -> None:
        for line in self.power_lines.values():
            for ref in line.node_refs:
                if ref not in self.towers and ref not in self.line_nodes:
                    raise ValueError(
                        f"power line {line.id} references node {ref} "
                        "absent from towers and line_nodes"
                    )

    def grid(self) -> GridIndex:
        if self._grid is None:
            self._grid = GridIndex(list(self.towers.values()))
        return self._grid

    def node_location(self, node_id: int) -> GeoPoint | None:
        for coll in (self.towers, self.line_nodes, self.railway_nodes):
            node = coll.get(node_id)
            if node is not None:
                return node.location
        return None

    def geo_near(self, p: GeoPoint, radius_m: float) -> list[OsmNode]:
        """Towers within the haversine radius, sorted by (distance, id)."""
        if radius_m <= 0:
            raise ValueError("radius must be positive")
        return [self.towers[tid] for _, tid in self.grid().query_radius(p, radius_m)]

    def towers_in_bbox(self, bbox: BoundingBox) -> list[OsmNode]:
        return [t for t in self.towers.values() if bbox.contains(t.location)]


def _node_doc(n: OsmNode) -> dict:
    return {"id": n.id, "lat": n.location.lat, "lon": n.location.lon, "tags": n.tags}


def _node_from_doc(d: dict) -> OsmNode:
    return OsmNode(id=int(d["id"]), location=GeoPoint(d["lat"], d["lon"]), tags=dict(d["tags"]))


def _line_doc(l: PowerLine) -> dict:
    return {"id": l.id, "node_refs": l.node_refs, "tags": l.tags}


def _bridge_doc(b: BridgePolygon) -> dict:
    return {"id": b.id, "node_refs": b.node_refs}


_COLLECTIONS = ("towers", "line_nodes", "power_lines", "railway_nodes", "bridges")


def persist(store: InfraStore, path: str) -> None:
    """Write the store as a directory of JSON documents plus a manifest."""
    try:
        os.makedirs(path, exist_ok=True)
        docs = {
            "towers": [_node_doc(n) for n in store.towers.values()],
            "line_nodes": [_node_doc(n) for n in store.line_nodes.values()],
            "power_lines": [_line_doc(l) for l in store.power_lines.values()],
            "railway_nodes": [_node_doc(n) for n in store.railway_nodes.values()],
            "bridges": [_bridge_doc(b) for b in store.bridges.values()],
        }
        for name, doc in docs.items():
            with open(os.path.join(path, f"{name}.json"), "w", encoding="utf-8") as fh:
                json.dump(doc, fh)
        manifest = {"schema_version": SCHEMA_VERSION, "collections": list(_COLLECTIONS)}
        with open(os.path.join(path, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh)
    except OSError as exc:
        raise IoError(f"cannot persist store to {path}: {exc}") from exc


def load(path: str) -> InfraStore:
    """Load a persisted store; inverse of :func:`persist`."""
    try:
        with open(os.path.join(path, "manifest.json"), "r", encoding="utf-8") as fh:
            manifest_raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read store manifest at {path}: {exc}") from exc
    try:
        manifest = json.loads(manifest_raw)
        version = manifest["schema_version"]
    except (ValueError, TypeError, KeyError) as exc:
        raise SchemaVersionMismatch(f"store manifest at {path} unreadable") from exc
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"store schema_version {version}, expected {SCHEMA_VERSION}"
        )

    def read(name: str) -> list:
        try:
            with open(os.path.join(path, f"{name}.json"), "r", encoding="utf-8") as fh:
                raw = fh.read()
        except OSError as exc:
            raise IoError(f"cannot read collection {name}: {exc}") from exc
        try:
            doc = json.loads(raw)
        except ValueError as exc:
            raise SchemaVersionMismatch(f"collection {name} corrupted") from exc
        if not isinstance(doc, list):
            raise SchemaVersionMismatch(f"collection {name} is not an array")
        return doc

    return InfraStore.from_collections(
        towers=[_node_from_doc(d) for d in read("towers")],
        line_nodes=[_node_from_doc(d) for d in read("line_nodes")],
        power_lines=[
            PowerLine(id=int(d["id"]), node_refs=[int(r) for r in d["node_refs"]], tags=dict(d["tags"]))
            for d in read("power_lines")
        ],
        railway_nodes=[_node_from_doc(d) for d in read("railway_nodes")],
        bridges=[
            BridgePolygon(id=int(d["id"]), node_refs=[int(r) for r in d["node_refs"]])
            for d in read("bridges")
        ],
    )


def ingest(
    bbox: BoundingBox,
    power_source: str,
    railway_source: str | None = None,
    bridge_source: str | None = None,
) -> InfraStore:
    """Fetch, parse, and assemble a store from Overpass sources or fixtures."""
    from . import osm

    towers, line_nodes, lines = osm.parse_elements(
        osm.fetch_power_infrastructure(bbox, power_source)
    )
    railway_nodes: list[OsmNode] = []
    if railway_source:
        railway_nodes = osm.parse_railway_elements(osm.fetch_railways(bbox, railway_source))
    bridges: list[BridgePolygon] = []
    bridge_members: list[OsmNode] = []
    if bridge_source:
        bridges, bridge_members = osm.parse_bridges(osm.fetch_bridges_raw(bbox, bridge_source))
    # bridge ring nodes live in the shared node collection so rings resolve
    line_node_map = {n.id: n for n in line_nodes}
    for m in bridge_members:
        line_node_map.setdefault(m.id, m)
    return InfraStore.from_collections(
        towers=towers,
        line_nodes=list(line_node_map.values()),
        power_lines=lines,
        railway_nodes=railway_nodes,
        bridges=bridges,
    )
