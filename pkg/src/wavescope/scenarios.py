"""What-if experiment suites over the apartment testbed replica.

Each scenario trains a radio map under one condition, tests it under another
(possibly identical) condition with a seeded Gaussian measurement-noise layer,
and reports the mean nearest-neighbor error plus per-stream RSS series.  The
reference accuracy numbers from the original study are carried as annotations
for comparison; the reproduction target is the orderings between scenarios,
not the absolute values (the apartment geometry is a replica).
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, replace as dc_replace
from typing import Dict, List, Optional

import numpy as np

from . import radiomap as rm
from .localization import evaluate, observations_from_map
from .radiomap import CrowdPattern, RadioMap, apply_crowd
from .scene import Scene, Surface, Transceiver
from .materials import DEFAULT_MATERIALS
from .testbed import RIGHT_AREA_MIN_X, RIGHT_DOOR, DOOR_TOP, build_paper_testbed
from .tracer import PropagationConfig, receive, trace

# Accuracy numbers reported by the original study (meters), as annotations.
PAPER_DEVICE_BASED_M = {
    "base": 1.84,
    "ceiling": 1.00,
    "freq_5p7": 1.55,
    "crowd_ap1": 2.36,
    "crowd_ap2": 3.06,
    "crowd_both": 3.03,
    "party_wall": 2.02,
    "party_ceiling": 1.64,
    "party_wall_trained_crowd": 2.35,
    "party_ceiling_trained_crowd": 2.09,
    "party_wall_trained_clear": 2.02,
    "party_ceiling_trained_clear": 1.64,
}
PAPER_DEVICE_FREE_M = {
    "df_base": 1.44,
    "df_ceiling": 4.48,
    "df_freq_5p7": 1.77,
}

DEFAULT_NOISE_SIGMA_DB = 2.0
DEFAULT_TRIALS = 20


@dataclass(frozen=True)
class ScenarioConfig:
    label: str
    testbed_kind: str  # device_based | device_free
    mounting: str = "wall"
    frequency_hz: float = 2.4e9
    train_condition: Optional[CrowdPattern] = None
    test_condition: Optional[CrowdPattern] = None
    # Device-based only: azimuth of the device carrier's stance relative to
    # the device during the survey and the test session.
    train_carrier_bearing: float = 0.0
    test_carrier_bearing: float = 0.0
    noise_sigma_db: float = DEFAULT_NOISE_SIGMA_DB
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    propagation: PropagationConfig = PropagationConfig()
    paper_reference_m: Optional[float] = None


@dataclass
class ScenarioReport:
    label: str
    mean_error_m: Optional[float]
    paper_reference_m: Optional[float]
    rss_series: Dict[str, Dict[int, float]]  # stream label -> location -> dBm
    train_digest: str = ""
    test_digest: str = ""
    extra: Dict[str, float] = field(default_factory=dict)


def _retune(transceivers, frequency_hz):
    return [
        Transceiver(t.id, t.position, t.role, t.transmit_power_mw,
                    t.antenna_gain_dbi, frequency_hz)
        for t in transceivers
    ]


def _series_from_map(radio_map: RadioMap) -> Dict[str, Dict[int, float]]:
    series: Dict[str, Dict[int, float]] = {s.label(): {} for s in radio_map.streams}
    for fp in sorted(radio_map.fingerprints, key=lambda f: f.location_id):
        for s in radio_map.streams:
            series[s.label()][fp.location_id] = fp.rss[s]
    return series


class SuiteRunner:
    """Builds and caches radio maps shared between scenarios."""

    def __init__(self, threads: int = 1):
        self.threads = threads
        self._cache: Dict[tuple, RadioMap] = {}

    def _condition_scene(self, scene: Scene, condition: Optional[CrowdPattern],
                         transceivers) -> Scene:
        if condition is None:
            return scene
        cond = condition
        if cond.kind == "around_ap" and cond.center is None:
            raise ValueError("around_ap pattern needs a resolved center")
        return apply_crowd(scene, cond)

    def build_map(
        self,
        cfg: ScenarioConfig,
        condition: Optional[CrowdPattern],
        carrier_bearing: float = 0.0,
    ) -> RadioMap:
        scene, transceivers, locations = build_paper_testbed(cfg.testbed_kind, cfg.mounting)
        transceivers = _retune(transceivers, cfg.frequency_hz)
        aps = [t for t in transceivers if t.role == "access_point"]
        mps = [t for t in transceivers if t.role == "monitoring_point"]
        local = self._condition_scene(scene, condition, transceivers)
        key = (cfg.testbed_kind, cfg.mounting, cfg.frequency_hz,
               _condition_key(condition), carrier_bearing,
               cfg.propagation.digest_fields().__repr__())
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        if cfg.testbed_kind == "device_based":
            built = rm.build_active_map(
                local, aps, locations, config=cfg.propagation,
                carrier_bearing=carrier_bearing, threads=self.threads
            )
        else:
            built = rm.build_passive_map(
                local, aps, mps, locations, config=cfg.propagation, threads=self.threads
            )
        self._cache[key] = built
        return built

    def run(self, cfg: ScenarioConfig) -> tuple[ScenarioReport, RadioMap, RadioMap]:
        train = self.build_map(cfg, cfg.train_condition, cfg.train_carrier_bearing)
        test = self.build_map(cfg, cfg.test_condition, cfg.test_carrier_bearing)
        obs = observations_from_map(
            test, noise_sigma_db=cfg.noise_sigma_db, trials=cfg.trials, seed=cfg.seed
        )
        report = evaluate(train, obs)
        return (
            ScenarioReport(
                label=cfg.label,
                mean_error_m=report.mean_error,
                paper_reference_m=cfg.paper_reference_m,
                rss_series=_series_from_map(test),
                train_digest=train.metadata,
                test_digest=test.metadata,
            ),
            train,
            test,
        )


def _condition_key(condition: Optional[CrowdPattern]):
    if condition is None:
        return None
    return (
        condition.kind,
        tuple(condition.center.tolist()) if condition.center is not None else None,
        condition.count,
        condition.ring_radius,
        condition.seed,
        tuple(tuple(l.tolist()) for l in condition.locations),
    )


def _ap_center(kind: str, mounting: str, ap_id: str):
    _, transceivers, _ = build_paper_testbed(kind, mounting)
    for t in transceivers:
        if t.id == ap_id:
            return np.array([t.position[0], t.position[1], 0.0])
    raise KeyError(ap_id)


def device_based_scenarios(
    propagation: Optional[PropagationConfig] = None,
    noise_sigma_db: float = DEFAULT_NOISE_SIGMA_DB,
    trials: int = DEFAULT_TRIALS,
) -> List[ScenarioConfig]:
    prop = propagation or PropagationConfig()
    base = ScenarioConfig(
        "base", "device_based", propagation=prop,
        noise_sigma_db=noise_sigma_db, trials=trials,
        paper_reference_m=PAPER_DEVICE_BASED_M["base"],
    )
    ap1_ring = CrowdPattern("around_ap", center=_ap_center("device_based", "wall", "AP1"),
                            count=4, ring_radius=0.6)
    ap2_ring = CrowdPattern("around_ap", center=_ap_center("device_based", "wall", "AP2"),
                            count=4, ring_radius=0.6)
    both = CrowdPattern(
        "explicit",
        locations=tuple(
            np.array(p)
            for p in rm.crowd_positions(build_paper_testbed("device_based", "wall")[0], ap1_ring)[0]
            + rm.crowd_positions(build_paper_testbed("device_based", "wall")[0], ap2_ring)[0]
        ),
    )
    party_test = rm.party(count=10, seed=7)
    party_train = rm.party(count=10, seed=11)

    def sc(label, **kw):
        kw.setdefault("paper_reference_m", PAPER_DEVICE_BASED_M.get(label))
        return dc_replace(base, label=label, **kw)

    return [
        base,
        sc("ceiling", mounting="ceiling"),
        sc("freq_5p7", frequency_hz=5.7e9),
        sc("crowd_ap1", test_condition=ap1_ring),
        sc("crowd_ap2", test_condition=ap2_ring),
        sc("crowd_both", test_condition=both),
        sc("party_wall", test_condition=party_test),
        sc("party_ceiling", mounting="ceiling", test_condition=party_test),
        sc("party_wall_trained_crowd", train_condition=party_train, test_condition=party_test),
        sc("party_ceiling_trained_crowd", mounting="ceiling",
           train_condition=party_train, test_condition=party_test),
        sc("party_wall_trained_clear", test_condition=party_test),
        sc("party_ceiling_trained_clear", mounting="ceiling", test_condition=party_test),
    ]


def device_free_scenarios(
    propagation: Optional[PropagationConfig] = None,
    noise_sigma_db: float = DEFAULT_NOISE_SIGMA_DB,
    trials: int = DEFAULT_TRIALS,
) -> List[ScenarioConfig]:
    prop = propagation or PropagationConfig()
    base = ScenarioConfig(
        "df_base", "device_free", propagation=prop,
        noise_sigma_db=noise_sigma_db, trials=trials,
        paper_reference_m=PAPER_DEVICE_FREE_M["df_base"],
    )

    def sc(label, **kw):
        kw.setdefault("paper_reference_m", PAPER_DEVICE_FREE_M.get(label))
        return dc_replace(base, label=label, **kw)

    return [
        base,
        sc("df_ceiling", mounting="ceiling"),
        sc("df_freq_5p7", frequency_hz=5.7e9),
    ]


def _apply_overrides(scenarios: List[ScenarioConfig], overrides: Optional[dict]):
    if not overrides:
        return scenarios
    out = scenarios
    if "labels" in overrides:
        keep = set(overrides["labels"])
        out = [s for s in out if s.label in keep]
    if "frequencies" in overrides:
        keep = set(overrides["frequencies"])
        out = [s for s in out if s.frequency_hz in keep]
    if "mountings" in overrides:
        keep = set(overrides["mountings"])
        out = [s for s in out if s.mounting in keep]
    for key in ("noise_sigma_db", "trials", "seed", "propagation"):
        if key in overrides:
            value = overrides[key]
            if key == "propagation" and isinstance(value, dict):
                value = PropagationConfig(**value)
            out = [dc_replace(s, **{key: value}) for s in out]
    return out


def run_device_based_suite(
    overrides: Optional[dict] = None,
    out_dir: Optional[str] = None,
    threads: int = 1,
) -> List[ScenarioReport]:
    runner = SuiteRunner(threads=threads)
    reports = []
    for cfg in _apply_overrides(device_based_scenarios(), overrides):
        report, train, test = runner.run(cfg)
        reports.append(report)
        if out_dir:
            _write_scenario(out_dir, report, train, test)
    if out_dir:
        _write_summary(out_dir, "device_based_summary.csv", reports)
    return reports


def run_device_free_suite(
    overrides: Optional[dict] = None,
    out_dir: Optional[str] = None,
    threads: int = 1,
) -> List[ScenarioReport]:
    runner = SuiteRunner(threads=threads)
    reports = []
    for cfg in _apply_overrides(device_free_scenarios(), overrides):
        report, train, test = runner.run(cfg)
        reports.append(report)
        if out_dir:
            _write_scenario(out_dir, report, train, test)
    prop = (overrides or {}).get("propagation")
    if isinstance(prop, dict):
        prop = PropagationConfig(**prop)
    outsider = run_outsider_experiment(propagation=prop, threads=threads)
    reports.append(outsider)
    if out_dir:
        _write_scenario(out_dir, outsider, None, None)
        _write_summary(out_dir, "device_free_summary.csv", reports)
    return reports


def sealed_outsider_scene(scene: Scene) -> Scene:
    """Close the right sub-area's doorway with a concrete panel."""
    panel = Surface(
        "outsider_seal",
        np.array(
            [
                [RIGHT_DOOR["x"], RIGHT_DOOR["y0"], 0.0],
                [RIGHT_DOOR["x"], RIGHT_DOOR["y1"], 0.0],
                [RIGHT_DOOR["x"], RIGHT_DOOR["y1"], DOOR_TOP],
                [RIGHT_DOOR["x"], RIGHT_DOOR["y0"], DOOR_TOP],
            ]
        ),
        DEFAULT_MATERIALS["concrete"],
    )
    return dc_replace(scene, surfaces=scene.surfaces + (panel,))


def run_outsider_experiment(
    propagation: Optional[PropagationConfig] = None,
    threads: int = 1,
) -> ScenarioReport:
    """Entity sweep over all device-free locations with the right area sealed.

    Reports the (AP2, MP2) stream, the only stream entirely inside the sealed
    area, for the entity at every location plus silence.
    """
    prop = propagation or PropagationConfig()
    scene, transceivers, locations = build_paper_testbed("device_free", "wall")
    scene = sealed_outsider_scene(scene)
    ap2 = next(t for t in transceivers if t.id == "AP2")
    mp2 = next(t for t in transceivers if t.id == "MP2")

    built = rm.build_passive_map(
        scene, [ap2], [mp2], locations, config=prop, threads=threads
    )
    stream = built.streams[0]
    series = {stream.label(): {}}
    for fp in sorted(built.fingerprints, key=lambda f: f.location_id):
        series[stream.label()][fp.location_id] = fp.rss[stream]
    silence = built.fingerprint(0).rss[stream]
    inside = inside_right_area_ids(locations)
    deltas_out = [
        abs(series[stream.label()][i] - silence)
        for i in range(1, len(locations) + 1)
        if i not in inside
    ]
    deltas_in = [
        abs(series[stream.label()][i] - silence) for i in sorted(inside)
    ]
    return ScenarioReport(
        label="outsider",
        mean_error_m=None,
        paper_reference_m=None,
        rss_series=series,
        test_digest=built.metadata,
        extra={
            "silence_dbm": silence,
            "max_outside_delta_db": max(deltas_out),
            "max_inside_delta_db": max(deltas_in),
        },
    )


def inside_right_area_ids(locations) -> set:
    return {
        i + 1
        for i, loc in enumerate(locations)
        if np.asarray(loc)[0] >= RIGHT_AREA_MIN_X
    }


def los_cut_location_ids(
    tx: Transceiver,
    rx: Transceiver,
    locations,
    radius: float = 0.15,
    height: float = 1.70,
    margin: float = 0.15,
) -> set:
    """Locations where a standing cylinder cuts the tx->rx line of sight.

    ``margin`` widens the corridor to the reception-relevant first Fresnel
    zone rather than the geometric silhouette alone.  A cylinder beyond
    either endpoint does not cut the segment.
    """
    a = np.asarray(tx.position, float)
    b = np.asarray(rx.position, float)
    ab = b[:2] - a[:2]
    denom = float(ab @ ab)
    cut = set()
    for i, loc in enumerate(locations):
        p = np.asarray(loc, float)[:2]
        t = float((p - a[:2]) @ ab / denom)
        if not 0.0 < t < 1.0:
            continue
        closest = a[:2] + t * ab
        if np.linalg.norm(p - closest) > radius + margin:
            continue
        z = a[2] + t * (b[2] - a[2])
        if z <= height:
            cut.add(i + 1)
    return cut


# ---------------------------------------------------------------------------
# Output tree


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_scenario(out_dir, report: ScenarioReport, train, test):
    d = os.path.join(out_dir, report.label)
    os.makedirs(d, exist_ok=True)
    files = []

    path = os.path.join(d, "report.csv")
    with open(path, "w") as fh:
        fh.write("label,mean_error_m,paper_reference_m\n")
        me = "" if report.mean_error_m is None else f"{report.mean_error_m:.3f}"
        pr = "" if report.paper_reference_m is None else f"{report.paper_reference_m:.2f}"
        fh.write(f"{report.label},{me},{pr}\n")
        for k, v in sorted(report.extra.items()):
            fh.write(f"# {k}: {v:.3f}\n")
    files.append(path)

    path = os.path.join(d, "rss_series.csv")
    with open(path, "w") as fh:
        fh.write("location_id,stream,rss_dbm\n")
        for stream in sorted(report.rss_series):
            for lid in sorted(report.rss_series[stream]):
                fh.write(f"{lid},{stream},{report.rss_series[stream][lid]:.3f}\n")
    files.append(path)

    for name, m in (("train_radiomap.csv", train), ("test_radiomap.csv", test)):
        if m is not None:
            path = os.path.join(d, name)
            m.save(path)
            files.append(path)

    with open(os.path.join(d, "manifest"), "w") as fh:
        for f in files:
            fh.write(f"{os.path.basename(f)} {_sha256_file(f)}\n")


def _write_summary(out_dir, name, reports: List[ScenarioReport]):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write("label,mean_error_m,paper_reference_m\n")
        for r in reports:
            me = "" if r.mean_error_m is None else f"{r.mean_error_m:.3f}"
            pr = "" if r.paper_reference_m is None else f"{r.paper_reference_m:.2f}"
            fh.write(f"{r.label},{me},{pr}\n")
