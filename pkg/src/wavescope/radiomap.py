"""Active and passive fingerprint radio maps.

Active maps record AP -> tracked-device RSS per calibration location (with the
carrying human standing next to the device); passive maps record every
AP -> MP stream with a single entity placed at each location, plus the
location-0 silence fingerprint taken with nobody present.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .scene import (
    ROLE_DEVICE,
    HumanCylinder,
    Scene,
    SceneError,
    Transceiver,
    place_entities,
)
from .tracer import PropagationConfig, predict_rss

SILENCE_LOCATION_ID = 0


class StreamId(NamedTuple):
    tx_id: str
    rx_id: str

    def label(self) -> str:
        return f"{self.tx_id}>{self.rx_id}"


@dataclass
class Fingerprint:
    location_id: int
    rss: Dict[StreamId, float]


@dataclass
class RadioMap:
    kind: str  # active | passive
    streams: tuple[StreamId, ...]
    fingerprints: List[Fingerprint]
    locations: Dict[int, np.ndarray]
    metadata: str = ""  # provenance digest

    def __post_init__(self):
        stream_set = set(self.streams)
        for fp in self.fingerprints:
            if set(fp.rss) != stream_set:
                raise ValueError(
                    f"fingerprint {fp.location_id}: stream set differs from map"
                )
        silence = [fp for fp in self.fingerprints if fp.location_id == SILENCE_LOCATION_ID]
        if self.kind == "passive" and len(silence) != 1:
            raise ValueError("passive map must contain exactly one silence fingerprint")
        if self.kind == "active" and silence:
            raise ValueError("active map must not contain a location-0 fingerprint")

    def vector(self, fp: Fingerprint) -> np.ndarray:
        return np.array([fp.rss[s] for s in self.streams])

    def fingerprint(self, location_id: int) -> Fingerprint:
        for fp in self.fingerprints:
            if fp.location_id == location_id:
                return fp
        raise KeyError(f"no fingerprint for location {location_id}")

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# kind: {self.kind}\n")
            fh.write(f"# streams: {','.join(s.label() for s in self.streams)}\n")
            fh.write(f"# digest: {self.metadata}\n")
            cols = ["location_id", "x", "y", "z"] + [s.label() for s in self.streams]
            fh.write(",".join(cols) + "\n")
            for fp in sorted(self.fingerprints, key=lambda f: f.location_id):
                loc = self.locations.get(fp.location_id, np.zeros(3))
                row = [str(fp.location_id)] + [f"{v:.3f}" for v in loc]
                row += [f"{fp.rss[s]:.3f}" for s in self.streams]
                fh.write(",".join(row) + "\n")

    @classmethod
    def load(cls, path) -> "RadioMap":
        kind = ""
        digest = ""
        streams: tuple[StreamId, ...] = ()
        fingerprints = []
        locations = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("# kind:"):
                    kind = line.split(":", 1)[1].strip()
                elif line.startswith("# streams:"):
                    streams = tuple(
                        StreamId(*s.split(">")) for s in line.split(":", 1)[1].strip().split(",")
                    )
                elif line.startswith("# digest:"):
                    digest = line.split(":", 1)[1].strip()
                elif line.startswith("location_id"):
                    continue
                else:
                    parts = line.split(",")
                    lid = int(parts[0])
                    locations[lid] = np.array([float(v) for v in parts[1:4]])
                    rss = {
                        s: float(v) for s, v in zip(streams, parts[4:])
                    }
                    fingerprints.append(Fingerprint(lid, rss))
        return cls(kind, streams, fingerprints, locations, digest)


def _provenance(scene: Scene, config: PropagationConfig, transceivers, locations, kind):
    payload = {
        "scene": scene.digest(),
        "config": config.digest_fields(),
        "transceivers": [
            [t.id, t.position.tolist(), t.role, t.transmit_power_mw,
             t.antenna_gain_dbi, t.frequency_hz]
            for t in transceivers
        ],
        "locations": [np.asarray(l, dtype=float).tolist() for l in locations],
        "kind": kind,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def carrier_base(scene: Scene, location, bearing: float = 0.0) -> np.ndarray:
    """Floor position of the human carrying the device at a map location.

    ``bearing`` is the azimuth (radians, 0 = +x) from the device to the
    carrier's stance; the offset keeps the receiver outside the cylinder and
    is flipped inward when it would leave the scene bounds.
    """
    loc = np.asarray(location, dtype=float)
    step = 0.3 * np.array([np.cos(bearing), np.sin(bearing), 0.0])
    base = np.array([loc[0], loc[1], 0.0]) + step
    if not scene.contains(base):
        base = np.array([loc[0], loc[1], 0.0]) - step
    return base


def build_active_map(
    scene: Scene,
    aps: Sequence[Transceiver],
    locations: Sequence,
    device_height: float = 1.2,
    config: Optional[PropagationConfig] = None,
    include_carrier: bool = True,
    carrier_template: Optional[HumanCylinder] = None,
    carrier_bearing: float = 0.0,
    threads: int = 1,
) -> RadioMap:
    """Device-based radio map: one AP->device stream per AP."""
    if not aps or not len(locations):
        raise ValueError("need at least one AP and one location")
    config = config or PropagationConfig()
    streams = tuple(StreamId(ap.id, "device") for ap in aps)

    def fingerprint_at(item):
        lid, loc = item
        loc = np.asarray(loc, dtype=float)
        local = scene
        if include_carrier:
            local = place_entities(
                scene, [carrier_base(scene, loc, carrier_bearing)], carrier_template
            )
        device = Transceiver(
            "device",
            np.array([loc[0], loc[1], device_height]),
            role=ROLE_DEVICE,
            antenna_gain_dbi=aps[0].antenna_gain_dbi,
            frequency_hz=aps[0].frequency_hz,
        )
        rss = {
            StreamId(ap.id, "device"): predict_rss(local, ap, device, config)
            for ap in aps
        }
        return Fingerprint(lid, rss)

    items = [(i + 1, loc) for i, loc in enumerate(locations)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fps = list(pool.map(fingerprint_at, items))
    else:
        fps = [fingerprint_at(it) for it in items]

    loc_index = {i + 1: np.asarray(l, dtype=float) for i, l in enumerate(locations)}
    carrier_tag = f"carrier@{carrier_bearing:.6f}" if include_carrier else "nocarrier"
    digest = _provenance(scene, config, aps, locations, f"active:{carrier_tag}")
    return RadioMap("active", streams, fps, loc_index, digest)


def build_passive_map(
    scene: Scene,
    aps: Sequence[Transceiver],
    mps: Sequence[Transceiver],
    locations: Sequence,
    entity: Optional[HumanCylinder] = None,
    config: Optional[PropagationConfig] = None,
    threads: int = 1,
) -> RadioMap:
    """Device-free radio map: AP x MP streams plus the silence fingerprint."""
    if not aps or not mps:
        raise ValueError("need at least one AP and one MP")
    config = config or PropagationConfig()
    streams = tuple(StreamId(ap.id, mp.id) for ap in aps for mp in mps)

    def measure(local_scene: Scene) -> Dict[StreamId, float]:
        from .tracer import receive, trace

        rss = {}
        for ap in aps:
            rays = trace(local_scene, ap, mps, config)
            for mp in mps:
                rss[StreamId(ap.id, mp.id)] = receive(
                    rays[mp.id], mp, ap, quantize=config.quantize_rss
                )
        return rss

    def fingerprint_at(item):
        lid, loc = item
        if lid == SILENCE_LOCATION_ID:
            return Fingerprint(lid, measure(scene))
        base = np.array([loc[0], loc[1], 0.0])
        local = place_entities(scene, [base], entity)
        return Fingerprint(lid, measure(local))

    items = [(SILENCE_LOCATION_ID, None)] + [
        (i + 1, np.asarray(loc, dtype=float)) for i, loc in enumerate(locations)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fps = list(pool.map(fingerprint_at, items))
    else:
        fps = [fingerprint_at(it) for it in items]

    loc_index = {i + 1: np.asarray(l, dtype=float) for i, l in enumerate(locations)}
    loc_index[SILENCE_LOCATION_ID] = np.full(3, np.nan)
    digest = _provenance(scene, config, list(aps) + list(mps), locations, "passive")
    return RadioMap("passive", streams, fps, loc_index, digest)


# ---------------------------------------------------------------------------
# Crowd placement


@dataclass(frozen=True)
class CrowdPattern:
    kind: str  # around_ap | party | explicit
    center: Optional[np.ndarray] = None
    count: int = 10
    ring_radius: float = 0.6
    seed: int = 0
    locations: tuple = ()


def around_ap(ap: Transceiver, count: int = 4, ring_radius: float = 0.6) -> CrowdPattern:
    center = np.array([ap.position[0], ap.position[1], 0.0])
    return CrowdPattern("around_ap", center=center, count=count, ring_radius=ring_radius)


def party(count: int = 10, seed: int = 0) -> CrowdPattern:
    return CrowdPattern("party", count=count, seed=seed)


def explicit(locations) -> CrowdPattern:
    return CrowdPattern("explicit", locations=tuple(np.asarray(l, float) for l in locations))


def _wall_clearance(scene: Scene, p: np.ndarray, radius: float) -> bool:
    """True when a cylinder of the given radius at p clears all vertical surfaces."""
    for s in scene.surfaces:
        if abs(s.normal[2]) > 0.9:
            continue  # floors/ceilings don't constrain standing room
        v2 = s.vertices[:, :2]
        for i in range(len(v2)):
            a, b = v2[i], v2[(i + 1) % len(v2)]
            ab = b - a
            denom = float(ab @ ab)
            if denom < 1e-12:
                continue
            t = float(np.clip((p[:2] - a) @ ab / denom, 0.0, 1.0))
            if np.linalg.norm(p[:2] - (a + t * ab)) < radius + 0.05:
                return False
    return True


def crowd_positions(scene: Scene, pattern: CrowdPattern, radius: float = 0.15):
    """Deterministic crowd placement; returns (positions, skipped_positions)."""
    placed: List[np.ndarray] = []
    skipped: List[np.ndarray] = []
    margin = radius + 0.05

    def admissible(p):
        if not (
            np.all(p[:2] >= scene.bounds_min[:2] + margin)
            and np.all(p[:2] <= scene.bounds_max[:2] - margin)
        ):
            return False
        if not _wall_clearance(scene, p, radius):
            return False
        return all(np.linalg.norm(p[:2] - q[:2]) >= 2.0 * radius for q in placed)

    if pattern.kind == "around_ap":
        for i in range(pattern.count):
            theta = 2.0 * math.pi * i / pattern.count
            p = pattern.center + pattern.ring_radius * np.array(
                [math.cos(theta), math.sin(theta), 0.0]
            )
            (placed if admissible(p) else skipped).append(p)
    elif pattern.kind == "party":
        rng = np.random.default_rng(pattern.seed)
        attempts = 0
        while len(placed) < pattern.count and attempts < 10000:
            attempts += 1
            xy = rng.uniform(scene.bounds_min[:2] + margin, scene.bounds_max[:2] - margin)
            p = np.array([xy[0], xy[1], 0.0])
            if admissible(p):
                placed.append(p)
    elif pattern.kind == "explicit":
        for loc in pattern.locations:
            p = np.array([loc[0], loc[1], 0.0])
            (placed if admissible(p) else skipped).append(p)
    else:
        raise ValueError(f"unknown crowd pattern kind {pattern.kind!r}")
    return placed, skipped


def apply_crowd(
    scene: Scene,
    pattern: CrowdPattern,
    template: Optional[HumanCylinder] = None,
) -> Scene:
    """Scene with the crowd's cylinders added; colliding positions skipped."""
    template = template or HumanCylinder(center_base=np.zeros(3))
    placed, _ = crowd_positions(scene, pattern, radius=template.radius)
    return place_entities(scene, placed, template)
