"""Canonical apartment testbed replica (66 m^2, ceiling 2.7 m).

The layout is an 11 x 6 m three-room apartment: living room (x < 4), middle
room/kitchen (4 < x < 7.5) and right room (x > 7.5), connected by doorways,
with a handful of furniture boxes.  Two APs sit on opposite side walls; the
device-free variant adds two monitoring points and a denser 44-location grid.

Exact wall and furniture placement is a fixed convention of this replica and
is shipped as versioned fixture files (``testbed_device_based.scene`` and
``testbed_device_free.scene``); qualitative trends, not absolute RSS values,
are the reproduction target.
"""

from __future__ import annotations

import os
from importlib import resources
from typing import List

import numpy as np
import yaml

from .scene import Scene, SceneBundle, Transceiver, load_bundle

WALL_AP_HEIGHT = 1.5
CEILING_HEIGHT = 2.7
MP_HEIGHT = 0.5
DOOR_TOP = 2.05

# Ceiling mounting relocates each AP from its wall bracket to a ceiling
# fixture point inside the room it serves (offset from the room's mirror
# axis, as ceiling drops rarely sit dead-center).
CEILING_AP_XY = {"AP1": (3.0, 4.5), "AP2": (8.0, 2.0)}

FIXTURES_ENV = "WAVESCOPE_FIXTURES"

# Doorway in the x=7.5 partition; the outsider scenario seals it.
RIGHT_DOOR = {"x": 7.5, "y0": 1.0, "y1": 2.0}
RIGHT_AREA_MIN_X = 7.5

_DEVICE_BASED_LOCATIONS = [
    (1.0, 5.0), (2.4, 3.2), (1.4, 0.9), (3.0, 1.5), (3.0, 4.5),
    (5.0, 5.0), (5.5, 2.5), (6.5, 1.0), (8.5, 5.0), (9.5, 2.5), (9.6, 1.2),
]

_GRID_X = [0.8, 1.8, 2.8, 3.6, 4.5, 5.5, 6.4, 7.1, 8.2, 9.2, 10.2]
_GRID_Y = [0.9, 2.3, 3.7, 5.1]
_DEVICE_FREE_LOCATIONS = [(x, y) for y in _GRID_Y for x in _GRID_X]


def _rect_x(name, x, y0, y1, z0, z1, material):
    return {
        "name": name,
        "material": material,
        "vertices": [[x, y0, z0], [x, y1, z0], [x, y1, z1], [x, y0, z1]],
    }


def _rect_y(name, y, x0, x1, z0, z1, material):
    return {
        "name": name,
        "material": material,
        "vertices": [[x0, y, z0], [x1, y, z0], [x1, y, z1], [x0, y, z1]],
    }


def _box(name, x0, y0, x1, y1, height, material):
    """Axis-aligned furniture box: four sides plus a top."""
    return [
        _rect_y(f"{name}_s", y0, x0, x1, 0.0, height, material),
        _rect_y(f"{name}_n", y1, x0, x1, 0.0, height, material),
        _rect_x(f"{name}_w", x0, y0, y1, 0.0, height, material),
        _rect_x(f"{name}_e", x1, y0, y1, 0.0, height, material),
        {
            "name": f"{name}_top",
            "material": material,
            "vertices": [
                [x0, y0, height], [x1, y0, height], [x1, y1, height], [x0, y1, height],
            ],
        },
    ]


def _apartment_surfaces() -> List[dict]:
    h = CEILING_HEIGHT
    surfaces = [
        {
            "name": "floor",
            "material": "concrete",
            "vertices": [[0, 0, 0], [11, 0, 0], [11, 6, 0], [0, 6, 0]],
        },
        {
            "name": "ceiling",
            "material": "concrete",
            "vertices": [[0, 0, h], [11, 0, h], [11, 6, h], [0, 6, h]],
        },
        _rect_x("wall_west", 0.0, 0.0, 6.0, 0.0, h, "brick"),
        _rect_x("wall_east", 11.0, 0.0, 6.0, 0.0, h, "brick"),
        _rect_y("wall_south", 0.0, 0.0, 11.0, 0.0, h, "brick"),
        _rect_y("wall_north", 6.0, 0.0, 11.0, 0.0, h, "brick"),
        # Partition x=4 with a doorway at y in [2.4, 3.4].
        _rect_x("partition_a_low", 4.0, 0.0, 2.4, 0.0, h, "plasterboard"),
        _rect_x("partition_a_lintel", 4.0, 2.4, 3.4, DOOR_TOP, h, "plasterboard"),
        _rect_x("partition_a_high", 4.0, 3.4, 6.0, 0.0, h, "plasterboard"),
        # Partition x=7.5 with a doorway at y in [1.0, 2.0].
        _rect_x("partition_b_low", 7.5, 0.0, RIGHT_DOOR["y0"], 0.0, h, "plasterboard"),
        _rect_x(
            "partition_b_lintel", 7.5, RIGHT_DOOR["y0"], RIGHT_DOOR["y1"],
            DOOR_TOP, h, "plasterboard",
        ),
        _rect_x("partition_b_high", 7.5, RIGHT_DOOR["y1"], 6.0, 0.0, h, "plasterboard"),
    ]
    surfaces += _box("sofa", 0.3, 0.2, 2.0, 0.75, 0.9, "wood")
    surfaces += _box("table", 1.2, 3.9, 2.4, 4.9, 0.75, "wood")
    surfaces += _box("counter", 4.2, 0.2, 6.2, 0.8, 1.0, "wood")
    surfaces += _box("wardrobe", 6.6, 5.4, 7.2, 5.95, 2.0, "chipboard")
    surfaces += _box("bed", 8.6, 5.3, 10.4, 5.95, 0.6, "wood")
    # Tall clutter: obstructs links near wall-mount height while ceiling-mounted
    # antennas still clear it over most of each path.
    surfaces += _box("fridge", 4.2, 5.3, 4.9, 5.95, 1.8, "metal")
    surfaces += _box("bookshelf", 3.0, 2.6, 3.4, 3.6, 1.9, "chipboard")
    surfaces += _box("cabinet", 6.9, 2.6, 7.3, 3.8, 1.9, "chipboard")
    return surfaces


def _ap(tid, x, y, z):
    return {
        "id": tid, "role": "access_point", "xyz": [x, y, z],
        "power_mw": 2.0, "gain_dbi": 3.0, "freq_hz": 2.4e9,
    }


def _mp(tid, x, y):
    return {
        "id": tid, "role": "monitoring_point", "xyz": [x, y, MP_HEIGHT],
        "gain_dbi": 3.0, "freq_hz": 2.4e9,
    }


def testbed_document(kind: str) -> dict:
    """Scene document for one paper testbed replica (wall-mounted APs)."""
    if kind not in ("device_based", "device_free"):
        raise ValueError(f"unknown testbed kind {kind!r}")
    doc = {
        "bounds": {"min": [0.0, 0.0, 0.0], "max": [11.0, 6.0, CEILING_HEIGHT]},
        "ceiling_height_m": CEILING_HEIGHT,
        "surfaces": _apartment_surfaces(),
        "cylinders": [],
        "transceivers": [
            _ap("AP1", 0.15, 3.0, WALL_AP_HEIGHT),
            _ap("AP2", 10.85, 3.0, WALL_AP_HEIGHT),
        ],
    }
    if kind == "device_based":
        doc["map_locations"] = [[x, y, 0.0] for x, y in _DEVICE_BASED_LOCATIONS]
    else:
        doc["transceivers"] += [_mp("MP1", 1.0, 1.0), _mp("MP2", 10.0, 1.2)]
        doc["map_locations"] = [[x, y, 0.0] for x, y in _DEVICE_FREE_LOCATIONS]
    return doc


def fixture_path(kind: str) -> str:
    name = f"testbed_{kind}.scene"
    override = os.environ.get(FIXTURES_ENV)
    if override:
        return os.path.join(override, name)
    return str(resources.files("wavescope") / "fixtures" / name)


def write_fixtures(directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for kind in ("device_based", "device_free"):
        path = os.path.join(directory, f"testbed_{kind}.scene")
        with open(path, "w") as fh:
            yaml.safe_dump(testbed_document(kind), fh, sort_keys=False)


def load_testbed(kind: str) -> SceneBundle:
    path = fixture_path(kind)
    if os.path.exists(path):
        with open(path) as fh:
            return load_bundle(yaml.safe_load(fh))
    return load_bundle(testbed_document(kind))


def build_paper_testbed(kind: str, mounting: str = "wall"):
    """Scene, transceivers and radio-map locations for one paper testbed.

    Wall mounting puts APs on their wall brackets at 1.5 m; ceiling mounting
    relocates them to the fixture points in ``CEILING_AP_XY`` at the ceiling.
    Returns (scene, transceivers, locations).
    """
    if mounting not in ("wall", "ceiling"):
        raise ValueError(f"unknown mounting {mounting!r}")
    bundle = load_testbed(kind)
    transceivers = []
    for t in bundle.transceivers:
        if t.role == "access_point":
            if mounting == "wall":
                pos = np.array([t.position[0], t.position[1], WALL_AP_HEIGHT])
            else:
                x, y = CEILING_AP_XY[t.id]
                pos = np.array([x, y, bundle.scene.ceiling_height])
            transceivers.append(
                Transceiver(t.id, pos, t.role, t.transmit_power_mw,
                            t.antenna_gain_dbi, t.frequency_hz)
            )
        else:
            transceivers.append(t)
    return bundle.scene, transceivers, list(bundle.map_locations)


if __name__ == "__main__":  # regenerate the shipped fixtures
    here = os.path.join(os.path.dirname(__file__), "fixtures")
    write_fixtures(here)
    print(f"fixtures written to {here}")
