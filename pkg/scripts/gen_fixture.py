#!/usr/bin/env python3
"""Generate the bundled Denmark-subset Overpass fixture.

Builds four power-line corridors (~200 towers) across Jutland/Funen-style
coordinates, with plain line nodes interleaved, two bridge rings, and one
railway way. Deterministic; coordinates are rounded to 6 decimals so graph
serialization round-trips bit-identically. The output is committed at
src/gridplan/data/denmark_fixture.json; re-run only when the layout needs
to change.
"""

import json
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "gridplan" / "data" / "denmark_fixture.json"

rng = random.Random(2024)

M_PER_DEG_LAT = 111_194.9266
SPACING_M = 300.0

# each corridor: (heading_deg, n_towers); corridor k+1 starts ~350 m from
# the last tower of corridor k so indirect edges (<=500 m) join them
FIRST_START = (55.3000, 9.2000)
CORRIDORS = [
    (70.0, 52),
    (20.0, 50),
    (100.0, 50),
    (55.0, 48),
]


def step(lat, lon, heading_deg, dist_m):
    dlat = dist_m * math.cos(math.radians(heading_deg)) / M_PER_DEG_LAT
    dlon = dist_m * math.sin(math.radians(heading_deg)) / (
        M_PER_DEG_LAT * math.cos(math.radians(lat))
    )
    return lat + dlat, lon + dlon


def r6(x):
    return round(x, 6)


def main():
    elements = []
    tower_id = 1000
    plain_id = 5000
    way_id = 2000

    next_start = FIRST_START
    junctions = []
    for heading, count in CORRIDORS:
        lat, lon = next_start
        junctions.append((lat, lon))
        refs = []
        for k in range(count):
            jitter_h = heading + rng.uniform(-18, 18)
            jitter_d = SPACING_M * rng.uniform(0.8, 1.2)
            elements.append(
                {
                    "type": "node",
                    "id": tower_id,
                    "lat": r6(lat),
                    "lon": r6(lon),
                    "tags": {"power": "tower"},
                }
            )
            refs.append(tower_id)
            tower_id += 1
            last_tower = (lat, lon)
            # occasionally interleave a plain line node (a line intersection)
            if k % 9 == 4:
                mlat, mlon = step(lat, lon, jitter_h, jitter_d / 2)
                elements.append(
                    {"type": "node", "id": plain_id, "lat": r6(mlat), "lon": r6(mlon), "tags": {}}
                )
                refs.append(plain_id)
                plain_id += 1
            lat, lon = step(lat, lon, jitter_h, jitter_d)
        elements.append(
            {
                "type": "way",
                "id": way_id,
                "nodes": refs,
                "tags": {"power": "line", "cables": "3", "voltage": "150000"},
            }
        )
        way_id += 1
        # next corridor starts ~350 m from this corridor's last tower
        next_start = step(last_tower[0], last_tower[1], heading + 120.0, 350.0)

    # bridges: two small closed rings near corridor junctions
    bridge_nodes = 7100
    for bwid, (blat, blon) in zip((7000, 7001), (junctions[1], junctions[2])):
        ring = []
        for da, do in ((0, 0), (0.0006, 0.0002), (0.0007, 0.0011), (0.0001, 0.0009)):
            elements.append(
                {
                    "type": "node",
                    "id": bridge_nodes,
                    "lat": r6(blat + da),
                    "lon": r6(blon + do),
                    "tags": {},
                }
            )
            ring.append(bridge_nodes)
            bridge_nodes += 1
        ring.append(ring[0])
        elements.append(
            {"type": "way", "id": bwid, "nodes": ring, "tags": {"man_made": "bridge"}}
        )

    # one railway with nodes every ~400 m
    rail_refs = []
    lat, lon = 55.2800, 9.3500
    rid = 8100
    for _ in range(20):
        elements.append({"type": "node", "id": rid, "lat": r6(lat), "lon": r6(lon), "tags": {}})
        rail_refs.append(rid)
        rid += 1
        lat, lon = step(lat, lon, 40.0, 400.0)
    elements.append(
        {"type": "way", "id": 8000, "nodes": rail_refs, "tags": {"railway": "rail"}}
    )

    doc = {
        "version": 0.6,
        "generator": "gridplan fixture generator",
        "elements": elements,
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1))
    towers = sum(1 for e in elements if e.get("tags", {}).get("power") == "tower")
    print(f"wrote {OUT} with {len(elements)} elements ({towers} towers)")


if __name__ == "__main__":
    main()
