"""Immutable 3D world model: surfaces, human cylinders, transceivers.

Scenes are loaded from YAML documents (see ``docs`` in the README for the
schema) and are safe to share across threads: every query here is a pure
function and :func:`place_entities` returns a fresh scene.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import yaml

from .geometry import (
    KIND_CYLINDER,
    KIND_NONE,
    KIND_SURFACE,
    SceneAccel,
    polygon_normal,
    unit,
    vec3,
)
from .materials import DEFAULT_MATERIALS, Material

COPLANARITY_TOL = 1e-6  # meters

ROLE_AP = "access_point"
ROLE_MP = "monitoring_point"
ROLE_DEVICE = "tracked_device"


class SceneError(ValueError):
    """Scene document or geometry violates the schema; carries element path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Surface:
    name: str
    vertices: np.ndarray  # (K, 3), ordered, coplanar
    material: Material
    normal: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 3:
            raise SceneError(self.name, "surface needs at least 3 xyz vertices")
        object.__setattr__(self, "vertices", v)
        n = polygon_normal(v)
        d = float(np.dot(n, v[0]))
        off_plane = np.abs(v @ n - d)
        if off_plane.max() > COPLANARITY_TOL:
            raise SceneError(
                self.name,
                f"vertices not coplanar (max deviation {off_plane.max():.2e} m)",
            )
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class HumanCylinder:
    center_base: np.ndarray  # on the floor
    radius: float = 0.15
    height: float = 1.70
    material: Material = DEFAULT_MATERIALS["metal"]

    def __post_init__(self):
        object.__setattr__(self, "center_base", np.asarray(self.center_base, dtype=float))
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("cylinder radius and height must be > 0")


@dataclass(frozen=True)
class Transceiver:
    id: str
    position: np.ndarray
    role: str = ROLE_AP
    transmit_power_mw: float = 2.0
    antenna_gain_dbi: float = 3.0
    frequency_hz: float = 2.4e9
    pattern: str = "isotropic"

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.role not in (ROLE_AP, ROLE_MP, ROLE_DEVICE):
            raise ValueError(f"transceiver {self.id!r}: unknown role {self.role!r}")
        if self.is_transmitter and self.transmit_power_mw <= 0:
            raise ValueError(f"transceiver {self.id!r}: transmit power must be > 0")
        if self.frequency_hz <= 0:
            raise ValueError(f"transceiver {self.id!r}: frequency must be > 0")

    @property
    def is_transmitter(self) -> bool:
        return self.role == ROLE_AP


@dataclass(frozen=True)
class Hit:
    element: object
    point: np.ndarray
    distance: float
    incidence_angle: float
    element_kind: str  # surface | cylinder | edge


@dataclass(frozen=True)
class Scene:
    surfaces: tuple[Surface, ...]
    cylinders: tuple[HumanCylinder, ...]
    bounds_min: np.ndarray
    bounds_max: np.ndarray
    ceiling_height: float

    def __post_init__(self):
        object.__setattr__(self, "bounds_min", np.asarray(self.bounds_min, dtype=float))
        object.__setattr__(self, "bounds_max", np.asarray(self.bounds_max, dtype=float))
        if self.ceiling_height <= 0:
            raise SceneError("scene", "ceiling height must be > 0")
        for s in self.surfaces:
            lo = self.bounds_min - COPLANARITY_TOL
            hi = self.bounds_max + COPLANARITY_TOL
            if np.any(s.vertices < lo) or np.any(s.vertices > hi):
                raise SceneError(s.name, "surface extends outside scene bounds")
        for i, c in enumerate(self.cylinders):
            if not self.contains(c.center_base):
                raise SceneError(f"cylinders[{i}]", "cylinder base outside bounds")

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(
            np.all(p >= self.bounds_min - COPLANARITY_TOL)
            and np.all(p <= self.bounds_max + COPLANARITY_TOL)
        )

    def accel(self) -> SceneAccel:
        cached = self.__dict__.get("_accel")
        if cached is None:
            cached = SceneAccel(self.surfaces, self.cylinders)
            object.__setattr__(self, "_accel", cached)
        return cached

    def digest(self) -> str:
        """Stable content hash over all geometry and materials."""
        payload = {
            "bounds": [self.bounds_min.tolist(), self.bounds_max.tolist()],
            "ceiling": self.ceiling_height,
            "surfaces": [
                [s.name, s.vertices.tolist(), _material_key(s.material)]
                for s in self.surfaces
            ],
            "cylinders": [
                [c.center_base.tolist(), c.radius, c.height, _material_key(c.material)]
                for c in self.cylinders
            ],
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _material_key(m: Material):
    return [m.name, m.relative_permittivity, m.conductivity, m.thickness,
            m.is_perfect_conductor, m.conductivity_exponent]


@dataclass(frozen=True)
class SceneBundle:
    """A scene document in full: geometry plus transceivers and map locations."""

    scene: Scene
    transceivers: tuple[Transceiver, ...]
    map_locations: tuple[np.ndarray, ...] = ()

    def transceiver(self, tid: str) -> Transceiver:
        for t in self.transceivers:
            if t.id == tid:
                return t
        raise KeyError(f"unknown transceiver id {tid!r}")


def load_scene(document: dict) -> Scene:
    """Validate a parsed scene document and build the Scene."""
    return load_bundle(document).scene


def load_bundle(document: dict) -> SceneBundle:
    if not isinstance(document, dict):
        raise SceneError("$", "scene document must be a mapping")
    try:
        bmin = vec3(*document["bounds"]["min"])
        bmax = vec3(*document["bounds"]["max"])
    except (KeyError, TypeError) as exc:
        raise SceneError("bounds", f"missing or malformed bounds: {exc}") from None
    ceiling = float(document.get("ceiling_height_m", bmax[2]))

    materials = dict(DEFAULT_MATERIALS)
    for i, m in enumerate(document.get("materials", []) or []):
        try:
            materials[m["name"]] = Material(
                name=m["name"],
                relative_permittivity=float(m.get("eps_r", 1.0)),
                conductivity=float(m.get("sigma", 0.0)),
                thickness=float(m.get("thickness_m", 0.1)),
                is_perfect_conductor=bool(m.get("pec", False)),
                conductivity_exponent=float(m.get("sigma_exponent", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneError(f"materials[{i}]", str(exc)) from None

    surfaces = []
    for i, s in enumerate(document.get("surfaces", []) or []):
        path = f"surfaces[{i}]"
        name = s.get("name", path)
        mat_name = s.get("material")
        if mat_name not in materials:
            raise SceneError(path, f"unknown material name {mat_name!r}")
        try:
            verts = np.array(s["vertices"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneError(path, f"malformed vertices: {exc}") from None
        try:
            surfaces.append(Surface(name, verts, materials[mat_name]))
        except SceneError as exc:
            raise SceneError(path, str(exc)) from None

    cylinders = []
    for i, c in enumerate(document.get("cylinders", []) or []):
        path = f"cylinders[{i}]"
        mat = materials.get(c.get("material", "metal"))
        if mat is None:
            raise SceneError(path, f"unknown material name {c.get('material')!r}")
        try:
            cylinders.append(
                HumanCylinder(
                    center_base=vec3(*c["center"]),
                    radius=float(c.get("radius", 0.15)),
                    height=float(c.get("height", 1.70)),
                    material=mat,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneError(path, str(exc)) from None

    scene = Scene(tuple(surfaces), tuple(cylinders), bmin, bmax, ceiling)

    transceivers = []
    for i, t in enumerate(document.get("transceivers", []) or []):
        path = f"transceivers[{i}]"
        try:
            transceivers.append(
                Transceiver(
                    id=str(t["id"]),
                    position=vec3(*t["xyz"]),
                    role=t.get("role", ROLE_AP),
                    transmit_power_mw=float(t.get("power_mw", 2.0)),
                    antenna_gain_dbi=float(t.get("gain_dbi", 3.0)),
                    frequency_hz=float(t.get("freq_hz", 2.4e9)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneError(path, str(exc)) from None

    locations = tuple(
        vec3(*p) for p in (document.get("map_locations", []) or [])
    )
    return SceneBundle(scene, tuple(transceivers), locations)


def load_bundle_file(path) -> SceneBundle:
    with open(path, "r") as fh:
        doc = yaml.safe_load(fh)
    return load_bundle(doc)


def place_entities(
    scene: Scene,
    locations: Sequence,
    template: Optional[HumanCylinder] = None,
) -> Scene:
    """Return a new scene with one cylinder per location (bases at locations)."""
    template = template or HumanCylinder(center_base=np.zeros(3))
    added = []
    for i, loc in enumerate(locations):
        p = np.asarray(loc, dtype=float)
        if not scene.contains(p):
            raise SceneError(f"locations[{i}]", f"location {p.tolist()} outside bounds")
        added.append(replace(template, center_base=p))
    return replace(scene, cylinders=scene.cylinders + tuple(added))


def intersect_ray(
    scene: Scene,
    origin,
    direction,
    max_distance: float,
) -> Optional[Hit]:
    """Nearest element hit along the ray within max_distance, or None."""
    if max_distance <= 0:
        raise ValueError("max_distance must be > 0")
    o = np.asarray(origin, dtype=float)
    d = unit(np.asarray(direction, dtype=float))
    t, kind, idx, normal = scene.accel().first_hits(o[None, :], d[None, :])
    if kind[0] == KIND_NONE or t[0] > max_distance:
        return None
    point = o + t[0] * d
    cos_inc = abs(float(np.dot(d, normal[0])))
    angle = math.acos(min(1.0, max(-1.0, cos_inc)))
    if kind[0] == KIND_SURFACE:
        return Hit(scene.surfaces[idx[0]], point, float(t[0]), angle, "surface")
    return Hit(scene.cylinders[idx[0]], point, float(t[0]), angle, "cylinder")
