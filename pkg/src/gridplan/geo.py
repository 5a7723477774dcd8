"""Geodesic primitives: coordinates, bounding boxes, distances, node snapping.

All distances are great-circle (haversine) on a sphere of radius
6,371,000 m. That keeps edge costs monotone-consistent with the A*
heuristic and is accurate to well under 0.5% at inspection scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .errors import NoNodeInRange


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 coordinate in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class BoundingBox:
    """An axis-aligned lat/lon box. Antimeridian-crossing boxes are rejected."""

    south: float
    west: float
    north: float
    east: float

    def __post_init__(self):
        if self.south > self.north:
            raise ValueError(f"south {self.south} > north {self.north}")
        if self.west > self.east:
            raise ValueError(f"west {self.west} > east {self.east} (antimeridian unsupported)")

    def contains(self, p: GeoPoint) -> bool:
        return self.south <= p.lat <= self.north and self.west <= p.lon <= self.east

    def as_query_string(self) -> str:
        return f"{self.south},{self.west},{self.north},{self.east}"

    @classmethod
    def parse(cls, text: str) -> "BoundingBox":
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"bbox must be S,W,N,E, got {text!r}")
        return cls(*parts)


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters. Symmetric; exactly 0 for equal points."""
    return kernels.haversine_deg(a.lat, a.lon, b.lat, b.lon)


def snap_to_nearest_node(p: GeoPoint, graph, max_radius_m: float) -> int:
    """Return the graph node id nearest to ``p``.

    Ties break toward the smallest node id. Raises NoNodeInRange when the
    nearest node is farther than ``max_radius_m``.
    """
    csr = graph.csr()
    dists = kernels.active.haversine_many(
        math.radians(p.lat), math.radians(p.lon), csr.lat_rad, csr.lon_rad
    )
    # node_ids are sorted ascending, so argmin's first-hit rule is the id tie-break
    idx = int(dists.argmin())
    if dists[idx] > max_radius_m:
        raise NoNodeInRange(
            f"nearest node {csr.node_ids[idx]} is {dists[idx]:.1f} m away, "
            f"beyond the {max_radius_m:.1f} m snap radius"
        )
    return int(csr.node_ids[idx])
