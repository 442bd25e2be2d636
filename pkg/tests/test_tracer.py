import math

import numpy as np
import pytest

from wavescope.materials import DEFAULT_MATERIALS
from wavescope.scene import Scene, Surface, Transceiver, place_entities
from wavescope.tracer import (
    C_LIGHT,
    NOISE_FLOOR_DBM,
    PropagationConfig,
    free_space_rss,
    predict_rss,
    receive,
    rss_grid,
    trace,
    vertical_polarization,
)

NO_DIFFRACTION = PropagationConfig(max_diffraction_order=0)


def empty_scene(size=100.0):
    return Scene(
        surfaces=(),
        cylinders=(),
        bounds_min=np.array([-size, -size, -size]),
        bounds_max=np.array([size, size, size]),
        ceiling_height=size,
    )


def pec_floor_scene(size=200.0):
    floor = Surface(
        "floor",
        np.array(
            [[-size, -size, 0], [size, -size, 0], [size, size, 0], [-size, size, 0]],
            dtype=float,
        ),
        DEFAULT_MATERIALS["metal"],
    )
    return Scene(
        surfaces=(floor,),
        cylinders=(),
        bounds_min=np.array([-size, -size, 0.0]),
        bounds_max=np.array([size, size, 50.0]),
        ceiling_height=50.0,
    )


def ap(pos, freq=2.4e9, name="tx"):
    return Transceiver(name, np.asarray(pos, dtype=float), role="access_point",
                       frequency_hz=freq)


def mp(pos, freq=2.4e9, name="rx"):
    return Transceiver(name, np.asarray(pos, dtype=float),
                       role="monitoring_point", frequency_hz=freq)


class TestFreeSpace:
    def test_matches_friis_formula(self):
        scene = empty_scene()
        tx = ap([0, 0, 0])
        for d in (0.5, 1.0, 3.7, 12.0, 30.0):
            rx = mp([d, 0, 0])
            assert predict_rss(scene, tx, rx, NO_DIFFRACTION) == pytest.approx(
                free_space_rss(tx, rx), abs=1e-6
            )

    def test_one_meter_reference_value(self):
        # 3.01 dBm + 3 + 3 - 40.05 dB FSPL at 1 m / 2.4 GHz.
        scene = empty_scene()
        rss = predict_rss(scene, ap([0, 0, 0]), mp([1, 0, 0]), NO_DIFFRACTION)
        assert rss == pytest.approx(-31.0, abs=0.5)

    def test_single_los_ray(self):
        scene = empty_scene()
        rays = trace(scene, ap([0, 0, 0]), [mp([5, 0, 0])], NO_DIFFRACTION)["rx"]
        assert len(rays) == 1
        assert rays[0].path_key == ()
        assert rays[0].unfolded_length == pytest.approx(5.0, abs=1e-9)


class TestTwoRay:
    def test_exactly_two_rays_over_pec_floor(self):
        scene = pec_floor_scene()
        rays = trace(scene, ap([0, 0, 2.0]), [mp([10, 0, 2.0])], NO_DIFFRACTION)["rx"]
        assert len(rays) == 2
        depths = sorted(r.depth for r in rays)
        assert depths == [0, 1] or [r.path_key for r in rays] == [(), (("R", 0, 0),)]

    def test_image_method_path_length(self):
        scene = pec_floor_scene()
        rays = trace(scene, ap([0, 0, 2.0]), [mp([10, 0, 2.0])], NO_DIFFRACTION)["rx"]
        bounce = next(r for r in rays if r.path_key)
        assert bounce.unfolded_length == pytest.approx(math.hypot(10.0, 4.0), abs=1e-9)

    def test_matches_analytic_two_ray_oracle(self):
        """Vector two-ray interference oracle, within 1 dB outside deep fades."""
        scene = pec_floor_scene()
        h = 2.0
        tx = ap([0, 0, h])
        freq = tx.frequency_hz
        k = 2.0 * math.pi * freq / C_LIGHT
        for d in (2.0, 3.0, 5.0, 8.0, 12.0, 15.0):
            rx = mp([d, 0, h])
            predicted = predict_rss(scene, tx, rx, NO_DIFFRACTION)
            oracle = self._two_ray_oracle(tx, rx, h, k)
            if abs(oracle - free_space_rss(tx, rx)) < 10.0:
                assert predicted == pytest.approx(oracle, abs=1.0)

    @staticmethod
    def _two_ray_oracle(tx, rx, h, k):
        d1_vec = rx.position - tx.position
        d1 = np.linalg.norm(d1_vec)
        image = tx.position.copy()
        image[2] = -image[2]
        d2_vec = rx.position - image
        d2 = np.linalg.norm(d2_vec)
        e1 = vertical_polarization(d1_vec / d1).astype(complex)
        # Reflected ray: s/p decompose at the PEC floor (R_par=+1, R_perp=-1).
        down = d2_vec / d2
        n = np.array([0.0, 0.0, 1.0])
        s_hat = np.cross(down, n)
        s_hat = s_hat / np.linalg.norm(s_hat)
        p_in = np.cross(s_hat, down)
        up = down - 2.0 * np.dot(down, n) * n
        p_out = np.cross(s_hat, up)
        e0 = vertical_polarization(down).astype(complex)
        e2 = -1.0 * np.dot(e0, s_hat) * s_hat + 1.0 * np.dot(e0, p_in) * p_out
        # Receiver: vertical dipole projection per arriving ray.
        a1 = np.dot(e1, vertical_polarization(d1_vec / d1).astype(complex))
        a2 = np.dot(e2, vertical_polarization(up).astype(complex))
        total = a1 * np.exp(-1j * k * d1) / d1 + a2 * np.exp(-1j * k * d2) / d2
        lam = 2.0 * math.pi / k
        g = 10.0 ** (tx.antenna_gain_dbi / 10.0) * 10.0 ** (rx.antenna_gain_dbi / 10.0)
        p_mw = tx.transmit_power_mw * g * (lam / (4 * math.pi)) ** 2 * float(
            np.sum(np.abs(total) ** 2)
        )
        return 10.0 * math.log10(p_mw)


class TestTermination:
    def test_max_depth_zero_keeps_los_only(self):
        scene = pec_floor_scene()
        config = PropagationConfig(max_depth=0, max_diffraction_order=0)
        rays = trace(scene, ap([0, 0, 2.0]), [mp([10, 0, 2.0])], config)["rx"]
        assert [r.path_key for r in rays] == [()]

    def test_min_power_floor_prunes(self):
        scene = pec_floor_scene()
        strict = PropagationConfig(min_power_dbm=-20.0, max_diffraction_order=0)
        rays = trace(scene, ap([0, 0, 2.0]), [mp([60, 0, 2.0])], strict)["rx"]
        assert all(r.depth == 0 for r in rays)

    def test_noise_floor_clamp(self):
        scene = empty_scene(size=1e5)
        rx = mp([9.0e4, 0, 0])
        rss = predict_rss(scene, ap([0, 0, 0]), rx, NO_DIFFRACTION)
        assert rss == NOISE_FLOOR_DBM

    def test_no_rays_returns_noise_floor(self):
        assert receive([], mp([1, 0, 0]), ap([0, 0, 0])) == NOISE_FLOOR_DBM


class TestObstruction:
    def test_cylinder_blocks_los(self):
        scene = empty_scene(20.0)
        tx = ap([-5, 0, 1.0])
        rx = mp([5, 0, 1.0])
        clear = predict_rss(scene, tx, rx, NO_DIFFRACTION)
        blocked_scene = place_entities(scene, [np.array([0.0, 0.0, 0.0])])
        blocked = predict_rss(blocked_scene, tx, rx, NO_DIFFRACTION)
        assert blocked < clear - 3.0

    def test_cylinder_above_los_does_not_block(self):
        scene = empty_scene(20.0)
        tx = ap([-5, 0, 2.5])
        rx = mp([5, 0, 2.5])
        clear = predict_rss(scene, tx, rx, NO_DIFFRACTION)
        short = place_entities(scene, [np.array([0.0, 0.0, 0.0])])
        # Entity height 1.7 m < LOS height 2.5 m: same direct path.
        assert predict_rss(short, tx, rx, NO_DIFFRACTION) == pytest.approx(
            clear, abs=1e-9
        )

    def test_wall_transmission_attenuates(self):
        wall = Surface(
            "wall",
            np.array([[0, -10, 0], [0, 10, 0], [0, 10, 5], [0, -10, 5]], dtype=float),
            DEFAULT_MATERIALS["brick"],
        )
        scene = Scene((wall,), (), np.array([-20.0, -20, 0]),
                      np.array([20.0, 20, 5]), 5.0)
        tx = ap([-5, 0, 2.0])
        rx = mp([5, 0, 2.0])
        through = predict_rss(scene, tx, rx, NO_DIFFRACTION)
        free = free_space_rss(tx, rx)
        assert through < free - 1.0
        assert through > free - 30.0


class TestDeterminism:
    def test_repeat_trace_identical(self):
        scene, txs, _ = _testbed()
        rxs = [t for t in txs if t.role == "monitoring_point"]
        config = PropagationConfig(tessellation_order=3, max_depth=3)
        a = trace(scene, txs[0], rxs, config)
        b = trace(scene, txs[0], rxs, config)
        for rx in rxs:
            va = receive(a[rx.id], rx, txs[0])
            vb = receive(b[rx.id], rx, txs[0])
            assert va == vb

    def test_quantize_rounds_to_integer(self):
        scene = empty_scene()
        config = PropagationConfig(max_diffraction_order=0, quantize_rss=True)
        rss = predict_rss(scene, ap([0, 0, 0]), mp([3, 1, 0]), config)
        assert rss == round(rss)


class TestReciprocity:
    def test_swap_changes_nothing_in_box_room(self):
        rng = np.random.default_rng(42)
        scene = _box_room(8.0, 6.0, 3.0)
        config = PropagationConfig(tessellation_order=4, max_depth=3)
        for _ in range(3):
            p1 = rng.uniform([1, 1, 0.5], [7, 5, 2.5])
            p2 = rng.uniform([1, 1, 0.5], [7, 5, 2.5])
            fwd = predict_rss(scene, ap(p1, name="a"), mp(p2, name="b"), config)
            rev = predict_rss(scene, ap(p2, name="b"), mp(p1, name="a"), config)
            assert abs(fwd - rev) < 0.1


class TestGrid:
    def test_grid_shape_and_origin(self):
        scene = empty_scene(10.0)
        xs, ys, values = rss_grid(scene, ap([0, 0, 0]), 4, 3, 1.0, NO_DIFFRACTION)
        assert values.shape == (3, 4)
        assert xs[0] == scene.bounds_min[0] and ys[-1] == scene.bounds_max[1]

    def test_grid_rejects_empty(self):
        with pytest.raises(ValueError):
            rss_grid(empty_scene(), ap([0, 0, 0]), 0, 3, 1.0)


def _testbed():
    from wavescope.testbed import build_paper_testbed

    return build_paper_testbed("device_free", "wall")


def _box_room(lx, ly, h):
    mats = DEFAULT_MATERIALS

    def rect(name, verts, m):
        return Surface(name, np.array(verts, dtype=float), mats[m])

    surfaces = (
        rect("floor", [[0, 0, 0], [lx, 0, 0], [lx, ly, 0], [0, ly, 0]], "concrete"),
        rect("ceiling", [[0, 0, h], [lx, 0, h], [lx, ly, h], [0, ly, h]], "concrete"),
        rect("w1", [[0, 0, 0], [0, ly, 0], [0, ly, h], [0, 0, h]], "brick"),
        rect("w2", [[lx, 0, 0], [lx, ly, 0], [lx, ly, h], [lx, 0, h]], "brick"),
        rect("w3", [[0, 0, 0], [lx, 0, 0], [lx, 0, h], [0, 0, h]], "brick"),
        rect("w4", [[0, ly, 0], [lx, ly, 0], [lx, ly, h], [0, ly, h]], "brick"),
    )
    return Scene(surfaces, (), np.zeros(3), np.array([lx, ly, h]), h)
