import math

import numpy as np
import pytest

from wavescope.materials import DEFAULT_MATERIALS, Material
from wavescope.scene import (
    HumanCylinder,
    Scene,
    SceneError,
    Surface,
    Transceiver,
    intersect_ray,
    load_bundle,
    place_entities,
)


def box_scene(size=10.0):
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


def minimal_doc():
    return {
        "bounds": {"min": [0, 0, 0], "max": [10, 10, 3]},
        "ceiling_height_m": 3.0,
        "surfaces": [
            {
                "name": "floor",
                "material": "concrete",
                "vertices": [[0, 0, 0], [10, 0, 0], [10, 10, 0], [0, 10, 0]],
            }
        ],
        "transceivers": [
            {"id": "ap", "role": "access_point", "xyz": [1, 1, 1.5]},
        ],
        "map_locations": [[2, 2, 0], [3, 3, 0]],
    }


class TestValidation:
    def test_non_coplanar_vertices_rejected_with_path(self):
        doc = minimal_doc()
        doc["surfaces"][0]["vertices"][2] = [10, 10, 0.5]
        with pytest.raises(SceneError) as err:
            load_bundle(doc)
        assert "surfaces[0]" in str(err.value)
        assert "coplanar" in str(err.value)

    def test_unknown_material_rejected(self):
        doc = minimal_doc()
        doc["surfaces"][0]["material"] = "unobtainium"
        with pytest.raises(SceneError, match="unobtainium"):
            load_bundle(doc)

    def test_surface_outside_bounds_rejected(self):
        doc = minimal_doc()
        doc["surfaces"][0]["vertices"] = [
            [0, 0, 0], [20, 0, 0], [20, 10, 0], [0, 10, 0]
        ]
        with pytest.raises(SceneError, match="bounds"):
            load_bundle(doc)

    def test_degenerate_polygon_rejected(self):
        with pytest.raises((SceneError, ValueError)):
            Surface(
                "line",
                np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float),
                DEFAULT_MATERIALS["brick"],
            )

    def test_bad_transceiver_role_rejected(self):
        doc = minimal_doc()
        doc["transceivers"][0]["role"] = "router"
        with pytest.raises(SceneError, match="transceivers\\[0\\]"):
            load_bundle(doc)

    def test_non_positive_power_rejected(self):
        with pytest.raises(ValueError):
            Transceiver("ap", np.zeros(3), transmit_power_mw=0.0)

    def test_material_invariants(self):
        with pytest.raises(ValueError):
            Material("bad", relative_permittivity=0.5)
        with pytest.raises(ValueError):
            Material("bad", relative_permittivity=2.0, conductivity=-1.0)

    def test_custom_material_definition(self):
        doc = minimal_doc()
        doc["materials"] = [
            {"name": "foam", "eps_r": 1.2, "sigma": 0.0, "thickness_m": 0.05}
        ]
        doc["surfaces"][0]["material"] = "foam"
        bundle = load_bundle(doc)
        assert bundle.scene.surfaces[0].material.relative_permittivity == 1.2


class TestQueries:
    def test_intersect_ray_exact_distance(self):
        scene = box_scene()
        hit = intersect_ray(scene, np.array([5.0, 5.0, 2.0]),
                            np.array([0.0, 0.0, -1.0]), 10.0)
        assert hit is not None
        assert hit.element_kind == "surface"
        assert hit.distance == pytest.approx(2.0, abs=1e-9)
        assert hit.incidence_angle == pytest.approx(0.0, abs=1e-9)

    def test_intersect_ray_oblique_angle(self):
        scene = box_scene()
        d = np.array([1.0, 0.0, -1.0]) / math.sqrt(2.0)
        hit = intersect_ray(scene, np.array([2.0, 5.0, 2.0]), d, 10.0)
        assert hit.distance == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-9)
        assert hit.incidence_angle == pytest.approx(math.pi / 4.0, abs=1e-9)

    def test_intersect_ray_miss_returns_none(self):
        scene = box_scene()
        assert intersect_ray(scene, np.array([5.0, 5.0, 2.0]),
                             np.array([0.0, 0.0, 1.0]), 100.0) is None

    def test_intersect_ray_cylinder(self):
        scene = place_entities(box_scene(), [np.array([5.0, 5.0, 0.0])])
        hit = intersect_ray(scene, np.array([1.0, 5.0, 1.0]),
                            np.array([1.0, 0.0, 0.0]), 10.0)
        assert hit.element_kind == "cylinder"
        assert hit.distance == pytest.approx(4.0 - 0.15, abs=1e-9)

    def test_ray_beyond_max_distance_ignored(self):
        scene = box_scene()
        assert intersect_ray(scene, np.array([5.0, 5.0, 2.0]),
                             np.array([0.0, 0.0, -1.0]), 1.0) is None


class TestImmutability:
    def test_place_entities_returns_new_scene(self):
        scene = box_scene()
        out = place_entities(scene, [np.array([1.0, 1.0, 0.0])])
        assert len(scene.cylinders) == 0
        assert len(out.cylinders) == 1

    def test_place_entities_outside_bounds_rejected(self):
        with pytest.raises(SceneError, match="locations\\[0\\]"):
            place_entities(box_scene(), [np.array([50.0, 1.0, 0.0])])

    def test_digest_stable_and_sensitive(self):
        a = box_scene()
        b = box_scene()
        assert a.digest() == b.digest()
        c = place_entities(a, [np.array([1.0, 1.0, 0.0])])
        assert c.digest() != a.digest()

    def test_frozen_dataclasses(self):
        scene = box_scene()
        with pytest.raises(AttributeError):
            scene.ceiling_height = 5.0
        with pytest.raises(AttributeError):
            HumanCylinder(center_base=np.zeros(3)).radius = 1.0


class TestDefaults:
    def test_transceiver_defaults_table(self):
        t = Transceiver("ap", np.zeros(3))
        assert t.transmit_power_mw == 2.0
        assert t.antenna_gain_dbi == 3.0
        assert t.frequency_hz == 2.4e9

    def test_human_cylinder_defaults(self):
        c = HumanCylinder(center_base=np.zeros(3))
        assert c.radius == 0.15
        assert c.height == 1.70
        assert c.material.is_perfect_conductor
