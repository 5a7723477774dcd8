"""OpenStreetMap extraction: Overpass queries, fixture emulation, parsing.

Each fetch accepts either an Overpass endpoint URL or a local fixture file.
Fixture mode applies the same selector and bbox semantics Overpass would:
tagged elements are matched inside the bbox, selected ways pull in all of
their member nodes (the ``>;`` recursion), and element order is preserved.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import httpx

from .geo import BoundingBox, GeoPoint
from .errors import DanglingReference, MalformedResponse, TransportError

log = logging.getLogger(__name__)

POWER_QUERY = (
    '[out:json][timeout:60];'
    '(node["power"="tower"]({bbox});way["power"="line"]({bbox});>;);'
    'out body;'
)
RAILWAY_QUERY = (
    '[out:json][timeout:60];'
    '(way["railway"="rail"]({bbox});>;);'
    'out body;'
)
BRIDGE_QUERY = (
    '[out:json][timeout:60];'
    '(way["man_made"="bridge"]({bbox});>;);'
    'out body;'
)

_HTTP_TIMEOUT = 60.0


@dataclass
class OsmNode:
    id: int
    location: GeoPoint
    tags: dict[str, str] = field(default_factory=dict)


@dataclass
class PowerLine:
    id: int
    node_refs: list[int]
    tags: dict[str, str] = field(default_factory=dict)


@dataclass
class BridgePolygon:
    id: int
    node_refs: list[int]  # closed ring: first == last

    def __post_init__(self):
        if len(self.node_refs) < 4 or self.node_refs[0] != self.node_refs[-1]:
            raise ValueError(f"way {self.id} is not a closed ring")


def _node_matches_power(el) -> bool:
    return el.get("tags", {}).get("power") == "tower"


def _way_matches_power(el) -> bool:
    return el.get("tags", {}).get("power") == "line"


def _way_matches_railway(el) -> bool:
    return el.get("tags", {}).get("railway") == "rail"


def _way_matches_bridge(el) -> bool:
    return el.get("tags", {}).get("man_made") == "bridge"


_SELECTORS = {
    "power": (_node_matches_power, _way_matches_power),
    "railway": (lambda el: False, _way_matches_railway),
    "bridge": (lambda el: False, _way_matches_bridge),
}

_QUERIES = {
    "power": POWER_QUERY,
    "railway": RAILWAY_QUERY,
    "bridge": BRIDGE_QUERY,
}


def _is_url(source: str) -> bool:
    return source.startswith("http://") or source.startswith("https://")


def _fetch_remote(query: str, endpoint: str) -> list[dict]:
    last_exc = None
    for attempt in range(2):
        try:
            resp = httpx.post(endpoint, data={"data": query}, timeout=_HTTP_TIMEOUT)
            if resp.status_code >= 500:
                last_exc = TransportError(f"{endpoint} answered {resp.status_code}")
                continue
            resp.raise_for_status()
            break
        except httpx.HTTPError as exc:
            last_exc = exc
    else:
        raise TransportError(f"overpass endpoint {endpoint} unreachable") from last_exc
    try:
        doc = resp.json()
    except ValueError as exc:
        raise MalformedResponse(f"{endpoint} returned non-JSON payload") from exc
    return _elements_of(doc)


def _elements_of(doc) -> list[dict]:
    if not isinstance(doc, dict) or not isinstance(doc.get("elements"), list):
        raise MalformedResponse("payload has no 'elements' array")
    return doc["elements"]


def _fetch_fixture(path: str, kind: str, bbox: BoundingBox) -> list[dict]:
    node_sel, way_sel = _SELECTORS[kind]
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise TransportError(f"fixture {path} unreadable: {exc}") from exc
    try:
        doc = json.loads(raw)
    except ValueError as exc:
        raise MalformedResponse(f"fixture {path} is not valid JSON") from exc
    elements = _elements_of(doc)

    nodes_by_id = {el["id"]: el for el in elements if el.get("type") == "node"}

    def in_bbox(el) -> bool:
        return bbox.south <= el["lat"] <= bbox.north and bbox.west <= el["lon"] <= bbox.east

    keep_ids: set[tuple[str, int]] = set()
    member_ids: set[int] = set()
    for el in elements:
        if el.get("type") == "node" and node_sel(el) and in_bbox(el):
            keep_ids.add(("node", el["id"]))
        elif el.get("type") == "way" and way_sel(el):
            members = el.get("nodes", [])
            hit = any(
                ref in nodes_by_id and in_bbox(nodes_by_id[ref]) for ref in members
            )
            if hit:
                keep_ids.add(("way", el["id"]))
                member_ids.update(members)

    out = []
    for el in elements:
        t = el.get("type")
        if (t, el.get("id")) in keep_ids:
            out.append(el)
        elif t == "node" and el["id"] in member_ids:
            out.append(el)
    return out


def _fetch(kind: str, bbox: BoundingBox, source: str) -> list[dict]:
    if _is_url(source):
        query = _QUERIES[kind].format(bbox=bbox.as_query_string())
        return _fetch_remote(query, source)
    return _fetch_fixture(source, kind, bbox)


def fetch_power_infrastructure(bbox: BoundingBox, source: str) -> list[dict]:
    """Raw Overpass elements for power=tower nodes and power=line ways."""
    return _fetch("power", bbox, source)


def fetch_railways(bbox: BoundingBox, source: str) -> list[dict]:
    """Raw Overpass elements for railway=rail ways and their nodes."""
    return _fetch("railway", bbox, source)


def fetch_bridges_raw(bbox: BoundingBox, source: str) -> list[dict]:
    """Raw Overpass elements for man_made=bridge ways and their nodes."""
    return _fetch("bridge", bbox, source)


def fetch_bridges(bbox: BoundingBox, source: str) -> list["BridgePolygon"]:
    """Closed bridge polygons within the bbox; open ways are dropped with a warning."""
    polygons, _ = parse_bridges(fetch_bridges_raw(bbox, source))
    return polygons


def _as_node(el) -> OsmNode:
    return OsmNode(
        id=int(el["id"]),
        location=GeoPoint(float(el["lat"]), float(el["lon"])),
        tags=dict(el.get("tags", {})),
    )


def parse_elements(raw: list[dict]) -> tuple[list[OsmNode], list[OsmNode], list[PowerLine]]:
    """Split raw power elements into towers, plain line nodes, and lines.

    Nodes tagged power=tower become towers. Nodes referenced by a line but
    not tower-tagged become line nodes (line intersections and the like).
    Anything else is discarded with a logged reason. A way referencing an
    id missing from ``raw`` raises DanglingReference.
    """
    nodes: dict[int, dict] = {}
    ways: list[dict] = []
    for el in raw:
        t = el.get("type")
        if t == "node":
            nodes[int(el["id"])] = el
        elif t == "way":
            if _way_matches_power(el):
                ways.append(el)
            else:
                log.debug("discarding way %s: not tagged power=line", el.get("id"))
        else:
            log.debug("discarding element of type %r", t)

    lines: list[PowerLine] = []
    referenced: set[int] = set()
    for way in ways:
        refs = [int(r) for r in way.get("nodes", [])]
        for ref in refs:
            if ref not in nodes:
                raise DanglingReference(
                    f"way {way.get('id')} references unknown node {ref}"
                )
        referenced.update(refs)
        lines.append(PowerLine(id=int(way["id"]), node_refs=refs, tags=dict(way.get("tags", {}))))

    towers: list[OsmNode] = []
    line_nodes: list[OsmNode] = []
    for nid in sorted(nodes):
        el = nodes[nid]
        if _node_matches_power(el):
            towers.append(_as_node(el))
        elif nid in referenced:
            line_nodes.append(_as_node(el))
        else:
            log.debug("discarding node %s: neither tower nor line member", nid)
    lines.sort(key=lambda l: l.id)
    return towers, line_nodes, lines


def parse_railway_elements(raw: list[dict]) -> list[OsmNode]:
    """Nodes lying on railway ways, the railway analogue of towers."""
    nodes = {int(el["id"]): el for el in raw if el.get("type") == "node"}
    referenced: set[int] = set()
    for el in raw:
        if el.get("type") == "way":
            for ref in el.get("nodes", []):
                if int(ref) not in nodes:
                    raise DanglingReference(
                        f"railway way {el.get('id')} references unknown node {ref}"
                    )
                referenced.add(int(ref))
    return [_as_node(nodes[nid]) for nid in sorted(referenced)]


def parse_bridges(raw: list[dict]) -> tuple[list[BridgePolygon], list[OsmNode]]:
    """Closed bridge rings plus their member nodes.

    Open ways are skipped with a warning rather than an error.
    """
    nodes = {int(el["id"]): el for el in raw if el.get("type") == "node"}
    polygons: list[BridgePolygon] = []
    used: set[int] = set()
    for el in raw:
        if el.get("type") != "way":
            continue
        refs = [int(r) for r in el.get("nodes", [])]
        if len(refs) < 4 or refs[0] != refs[-1]:
            log.warning("bridge way %s is not a closed ring, skipping", el.get("id"))
            continue
        for ref in refs:
            if ref not in nodes:
                raise DanglingReference(
                    f"bridge way {el.get('id')} references unknown node {ref}"
                )
        polygons.append(BridgePolygon(id=int(el["id"]), node_refs=refs))
        used.update(refs)
    members = [_as_node(nodes[nid]) for nid in sorted(used)]
    polygons.sort(key=lambda p: p.id)
    return polygons, members
