import os
import random
import stat

import pytest

from gridplan import store as store_mod
from gridplan.errors import IoError, SchemaVersionMismatch
from gridplan.geo import BoundingBox, GeoPoint
from gridplan.osm import BridgePolygon, OsmNode, PowerLine
from gridplan.store import InfraStore, ingest, load, persist

import oracles

FIXTURE = os.path.join(os.path.dirname(__file__), "..", "src", "gridplan", "data", "denmark_fixture.json")
WIDE = BoundingBox(54.0, 8.0, 57.0, 12.0)


def _random_store(rng: random.Random, n: int) -> InfraStore:
    towers = [
        OsmNode(id=i + 1, location=GeoPoint(55 + rng.random() * 0.2, 10 + rng.random() * 0.4))
        for i in range(n)
    ]
    return InfraStore.from_collections(towers=towers)


def denmark_store() -> InfraStore:
    return ingest(WIDE, FIXTURE, FIXTURE, FIXTURE)


def test_geo_near_isolated_tower():
    s = InfraStore.from_collections(
        towers=[
            OsmNode(1, GeoPoint(55.0, 10.0)),
            OsmNode(2, GeoPoint(55.5, 10.5)),
        ]
    )
    hits = s.geo_near(GeoPoint(55.0, 10.0), 0.5)
    assert [t.id for t in hits] == [1]


def test_geo_near_radius_too_small():
    s = InfraStore.from_collections(towers=[OsmNode(1, GeoPoint(55.0, 10.0))])
    assert s.geo_near(GeoPoint(55.1, 10.0), 100.0) == []


def test_geo_near_matches_linear_scan_randomized():
    rng = random.Random(123)
    for _ in range(200):
        s = _random_store(rng, rng.randint(1, 60))
        p = GeoPoint(55 + rng.random() * 0.2, 10 + rng.random() * 0.4)
        radius = rng.uniform(50, 20_000)
        got = [t.id for t in s.geo_near(p, radius)]
        nodes = {t.id: t.location for t in s.towers.values()}
        assert got == oracles.linear_scan_radius(p, nodes, radius)


def test_geo_near_sorted_by_distance_then_id():
    loc = GeoPoint(55.0, 10.0)
    s = InfraStore.from_collections(
        towers=[OsmNode(9, loc), OsmNode(4, loc), OsmNode(2, GeoPoint(55.0005, 10.0))]
    )
    assert [t.id for t in s.geo_near(GeoPoint(55.0, 10.0), 500.0)] == [4, 9, 2]


def test_persist_load_roundtrip_denmark(tmp_path):
    s = denmark_store()
    persist(s, str(tmp_path / "store"))
    s2 = load(str(tmp_path / "store"))
    assert s2.towers == s.towers
    assert s2.line_nodes == s.line_nodes
    assert s2.power_lines == s.power_lines
    assert s2.railway_nodes == s.railway_nodes
    assert s2.bridges == s.bridges


def test_load_missing_dir_is_io_error(tmp_path):
    with pytest.raises(IoError):
        load(str(tmp_path / "nope"))


def test_load_corrupted_manifest(tmp_path):
    d = tmp_path / "store"
    d.mkdir()
    (d / "manifest.json").write_text("{not json")
    with pytest.raises(SchemaVersionMismatch):
        load(str(d))


def test_load_wrong_schema_version(tmp_path):
    s = _random_store(random.Random(1), 3)
    persist(s, str(tmp_path / "store"))
    manifest = tmp_path / "store" / "manifest.json"
    manifest.write_text('{"schema_version": 99, "collections": []}')
    with pytest.raises(SchemaVersionMismatch):
        load(str(tmp_path / "store"))


def test_persist_to_readonly_path_is_io_error(tmp_path):
    target = tmp_path / "ro"
    target.mkdir()
    os.chmod(target, stat.S_IRUSR | stat.S_IXUSR)
    try:
        if os.access(target, os.W_OK):
            pytest.skip("running as privileged user that ignores mode bits")
        with pytest.raises(IoError):
            persist(_random_store(random.Random(1), 3), str(target / "store"))
    finally:
        os.chmod(target, stat.S_IRWXU)


def test_store_rejects_unresolvable_line_refs():
    with pytest.raises(ValueError):
        InfraStore.from_collections(
            towers=[OsmNode(1, GeoPoint(55.0, 10.0))],
            power_lines=[PowerLine(id=10, node_refs=[1, 999])],
        )


def test_ingest_denmark_collections():
    s = denmark_store()
    assert len(s.towers) == 200
    assert len(s.power_lines) == 4
    assert len(s.railway_nodes) == 20
    assert len(s.bridges) == 2
    # bridge ring nodes resolve through the shared node collection
    for b in s.bridges.values():
        for ref in b.node_refs:
            assert s.node_location(ref) is not None
