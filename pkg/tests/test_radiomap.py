import numpy as np
import pytest

from wavescope.materials import DEFAULT_MATERIALS
from wavescope.radiomap import (
    CrowdPattern,
    Fingerprint,
    RadioMap,
    StreamId,
    apply_crowd,
    around_ap,
    build_active_map,
    build_passive_map,
    carrier_base,
    crowd_positions,
    explicit,
    party,
)
from wavescope.scene import Scene, Surface, Transceiver
from wavescope.tracer import PropagationConfig

FAST = PropagationConfig(tessellation_order=2, max_depth=1, max_diffraction_order=0)


def room(size=10.0):
    floor = Surface(
        "floor",
        np.array([[0, 0, 0], [size, 0, 0], [size, size, 0], [0, size, 0]], dtype=float),
        DEFAULT_MATERIALS["concrete"],
    )
    return Scene(
        surfaces=(floor,),
        cylinders=(),
        bounds_min=np.zeros(3),
        bounds_max=np.array([size, size, 3.0]),
        ceiling_height=3.0,
    )


def ap(tid, x, y):
    return Transceiver(tid, np.array([x, y, 1.5]), role="access_point")


def mp(tid, x, y):
    return Transceiver(tid, np.array([x, y, 0.5]), role="monitoring_point")


LOCATIONS = [np.array([2.0, 2.0, 0.0]), np.array([5.0, 5.0, 0.0]),
             np.array([8.0, 3.0, 0.0])]


class TestActiveMap:
    def test_streams_and_ids(self):
        m = build_active_map(room(), [ap("AP1", 1, 1), ap("AP2", 9, 9)],
                             LOCATIONS, config=FAST)
        assert m.kind == "active"
        assert m.streams == (StreamId("AP1", "device"), StreamId("AP2", "device"))
        assert sorted(fp.location_id for fp in m.fingerprints) == [1, 2, 3]
        assert 0 not in m.locations

    def test_carrier_changes_rss(self):
        # Carrier stands 0.3 m east of the device, between it and this AP.
        aps = [ap("AP1", 9, 2)]
        locs = [np.array([2.0, 2.0, 0.0])]
        with_carrier = build_active_map(room(), aps, locs, config=FAST)
        without = build_active_map(room(), aps, locs, config=FAST,
                                   include_carrier=False)
        s = StreamId("AP1", "device")
        assert with_carrier.fingerprint(1).rss[s] < without.fingerprint(1).rss[s] - 1.0

    def test_requires_aps_and_locations(self):
        with pytest.raises(ValueError):
            build_active_map(room(), [], LOCATIONS, config=FAST)
        with pytest.raises(ValueError):
            build_active_map(room(), [ap("AP1", 1, 1)], [], config=FAST)

    def test_threads_match_serial(self):
        aps = [ap("AP1", 1, 1), ap("AP2", 9, 9)]
        serial = build_active_map(room(), aps, LOCATIONS, config=FAST, threads=1)
        parallel = build_active_map(room(), aps, LOCATIONS, config=FAST, threads=4)
        for lid in (1, 2, 3):
            assert serial.fingerprint(lid).rss == parallel.fingerprint(lid).rss


class TestCarrierBase:
    def test_default_bearing_east(self):
        base = carrier_base(room(), [2.0, 2.0, 0.0])
        np.testing.assert_allclose(base, [2.3, 2.0, 0.0])

    def test_bearing_rotates_offset(self):
        base = carrier_base(room(), [2.0, 2.0, 0.0], bearing=np.pi / 2.0)
        np.testing.assert_allclose(base, [2.0, 2.3, 0.0], atol=1e-12)

    def test_flips_inward_at_boundary(self):
        base = carrier_base(room(), [9.9, 2.0, 0.0])
        np.testing.assert_allclose(base, [9.6, 2.0, 0.0])


class TestPassiveMap:
    def test_silence_and_streams(self):
        m = build_passive_map(room(), [ap("AP1", 1, 1)], [mp("MP1", 9, 1), mp("MP2", 1, 9)],
                              LOCATIONS, config=FAST)
        assert m.kind == "passive"
        assert m.streams == (StreamId("AP1", "MP1"), StreamId("AP1", "MP2"))
        assert sorted(fp.location_id for fp in m.fingerprints) == [0, 1, 2, 3]
        assert np.all(np.isnan(m.locations[0]))

    def test_entity_perturbs_near_link(self):
        # Entity standing on the AP1->MP1 line attenuates that stream.
        m = build_passive_map(room(), [ap("AP1", 1, 5)], [mp("MP1", 9, 5)],
                              [np.array([5.0, 5.0, 0.0])], config=FAST)
        s = StreamId("AP1", "MP1")
        assert m.fingerprint(1).rss[s] < m.fingerprint(0).rss[s] - 1.0

    def test_requires_aps_and_mps(self):
        with pytest.raises(ValueError):
            build_passive_map(room(), [], [mp("MP1", 9, 1)], LOCATIONS, config=FAST)
        with pytest.raises(ValueError):
            build_passive_map(room(), [ap("AP1", 1, 1)], [], LOCATIONS, config=FAST)


class TestInvariants:
    def streams(self):
        return (StreamId("AP1", "device"),)

    def test_passive_requires_one_silence(self):
        s = self.streams()
        with pytest.raises(ValueError, match="silence"):
            RadioMap("passive", s, [Fingerprint(1, {s[0]: -50.0})], {1: np.zeros(3)})

    def test_active_rejects_silence(self):
        s = self.streams()
        with pytest.raises(ValueError, match="location-0"):
            RadioMap("active", s, [Fingerprint(0, {s[0]: -50.0})], {0: np.zeros(3)})

    def test_fingerprint_stream_set_must_match(self):
        s = self.streams()
        other = StreamId("AP2", "device")
        with pytest.raises(ValueError, match="stream set"):
            RadioMap("active", s, [Fingerprint(1, {other: -50.0})], {1: np.zeros(3)})

    def test_unknown_fingerprint_id(self):
        s = self.streams()
        m = RadioMap("active", s, [Fingerprint(1, {s[0]: -50.0})], {1: np.zeros(3)})
        with pytest.raises(KeyError):
            m.fingerprint(7)


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        m = build_passive_map(room(), [ap("AP1", 1, 1)], [mp("MP1", 9, 1)],
                              LOCATIONS, config=FAST)
        path = tmp_path / "map.csv"
        m.save(path)
        loaded = RadioMap.load(path)
        assert loaded.kind == m.kind
        assert loaded.streams == m.streams
        assert loaded.metadata == m.metadata
        for fp in m.fingerprints:
            got = loaded.fingerprint(fp.location_id)
            for s in m.streams:
                assert got.rss[s] == pytest.approx(fp.rss[s], abs=5e-4)

    def test_digest_sensitive_to_config_and_locations(self):
        aps = [ap("AP1", 1, 1)]
        base = build_active_map(room(), aps, LOCATIONS, config=FAST)
        again = build_active_map(room(), aps, LOCATIONS, config=FAST)
        assert base.metadata == again.metadata
        deeper = build_active_map(room(), aps, LOCATIONS,
                                  config=PropagationConfig(tessellation_order=2,
                                                           max_depth=2,
                                                           max_diffraction_order=0))
        assert deeper.metadata != base.metadata
        moved = build_active_map(room(), aps, LOCATIONS[:2], config=FAST)
        assert moved.metadata != base.metadata

    def test_digest_sensitive_to_carrier_bearing(self):
        aps = [ap("AP1", 1, 1)]
        east = build_active_map(room(), aps, LOCATIONS, config=FAST)
        north = build_active_map(room(), aps, LOCATIONS, config=FAST,
                                 carrier_bearing=np.pi / 2.0)
        assert east.metadata != north.metadata


class TestCrowds:
    def test_around_ap_ring(self):
        pattern = around_ap(ap("AP1", 5, 5), count=4, ring_radius=0.6)
        placed, skipped = crowd_positions(room(), pattern)
        assert len(placed) == 4 and not skipped
        for p in placed:
            assert np.linalg.norm(p[:2] - [5, 5]) == pytest.approx(0.6, abs=1e-9)

    def test_party_deterministic_and_seeded(self):
        a, _ = crowd_positions(room(), party(count=6, seed=3))
        b, _ = crowd_positions(room(), party(count=6, seed=3))
        c, _ = crowd_positions(room(), party(count=6, seed=4))
        assert len(a) == 6
        np.testing.assert_array_equal(np.array(a), np.array(b))
        assert not np.array_equal(np.array(a), np.array(c))

    def test_party_separation_and_bounds(self):
        placed, _ = crowd_positions(room(), party(count=12, seed=0), radius=0.15)
        pts = np.array(placed)[:, :2]
        assert np.all(pts >= 0.2) and np.all(pts <= 9.8)
        d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        np.fill_diagonal(d, np.inf)
        assert d.min() >= 0.3

    def test_explicit_skips_inadmissible(self):
        pattern = explicit([[5.0, 5.0, 0.0], [50.0, 5.0, 0.0]])
        placed, skipped = crowd_positions(room(), pattern)
        assert len(placed) == 1 and len(skipped) == 1

    def test_apply_crowd_adds_cylinders(self):
        scene = apply_crowd(room(), around_ap(ap("AP1", 5, 5), count=4))
        assert len(scene.cylinders) == 4

    def test_unknown_pattern_rejected(self):
        with pytest.raises(ValueError, match="crowd pattern"):
            crowd_positions(room(), CrowdPattern("mosh_pit"))
