"""HTTP API over the simulator: scenes, heatmaps, radio maps, localization.

Scenes are stored immutably under content-addressed ids; long-running work
runs as asynchronous jobs polled via ``GET /api/jobs/{id}``.  Every numeric
result is serialized with fixed 3-fraction-digit RSS so wire results are
bit-identical to the library/CLI output for equal inputs.
"""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from . import radiomap as rm
from .localization import Observation, StreamMismatchError, localize_nn
from .radiomap import RadioMap, StreamId
from .scene import SceneBundle, SceneError, load_bundle
from .scenarios import run_device_based_suite, run_device_free_suite
from .tracer import PropagationConfig, rss_grid

JOB_QUEUED = "queued"
JOB_RUNNING = "running"
JOB_DONE = "done"
JOB_FAILED = "failed"
_FORWARD = {
    JOB_QUEUED: {JOB_RUNNING, JOB_FAILED},
    JOB_RUNNING: {JOB_DONE, JOB_FAILED},
    JOB_DONE: set(),
    JOB_FAILED: set(),
}


@dataclass
class JobRecord:
    job_id: str
    kind: str
    status: str = JOB_QUEUED
    progress: float = 0.0
    result_id: Optional[str] = None
    error: Optional[str] = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def transition(self, status: str, **kw):
        with self._lock:
            if status != self.status and status not in _FORWARD[self.status]:
                raise RuntimeError(f"illegal transition {self.status} -> {status}")
            self.status = status
            for k, v in kw.items():
                setattr(self, k, v)

    def to_json(self):
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "progress": self.progress,
            "result_id": self.result_id,
            "error": self.error,
        }


def _problem(status: int, title: str, pointer: str = "", detail: str = ""):
    return JSONResponse(
        status_code=status,
        content={"status": status, "title": title, "pointer": pointer, "detail": detail},
    )


def _scene_id(document: dict) -> str:
    blob = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _config(doc: Optional[dict]) -> PropagationConfig:
    doc = doc or {}
    kwargs = {
        k: doc[k]
        for k in ("max_depth", "min_power_dbm", "tessellation_order",
                  "max_diffraction_order", "quantize_rss")
        if k in doc
    }
    return PropagationConfig(**kwargs)


class Store:
    """Append-only stores for scenes, jobs and results."""

    def __init__(self, workers: int = 4):
        self.scenes: Dict[str, tuple[dict, SceneBundle]] = {}
        self.jobs: Dict[str, JobRecord] = {}
        self.results: Dict[str, Any] = {}
        self.maps: Dict[str, RadioMap] = {}
        self.pool = ThreadPoolExecutor(max_workers=workers)
        self.lock = threading.Lock()

    def submit(self, kind: str, fn) -> JobRecord:
        job = JobRecord(job_id=uuid.uuid4().hex, kind=kind)
        with self.lock:
            self.jobs[job.job_id] = job

        def run():
            job.transition(JOB_RUNNING, progress=0.0)
            try:
                result = fn()
                result_id = uuid.uuid4().hex
                with self.lock:
                    self.results[result_id] = result
                    if isinstance(result, dict) and result.get("kind_tag") == "radiomap":
                        self.maps[result_id] = result["_map"]
                job.transition(JOB_DONE, progress=1.0, result_id=result_id)
            except Exception as exc:  # job failure carries the error detail
                job.transition(JOB_FAILED, error=str(exc))

        self.pool.submit(run)
        return job


def _map_to_json(m: RadioMap) -> dict:
    return {
        "kind_tag": "radiomap",
        "kind": m.kind,
        "digest": m.metadata,
        "streams": [s.label() for s in m.streams],
        "fingerprints": [
            {
                "location_id": fp.location_id,
                "location": [
                    None if np.isnan(v) else round(float(v), 3)
                    for v in m.locations[fp.location_id]
                ],
                "rss_dbm": {s.label(): f"{fp.rss[s]:.3f}" for s in m.streams},
            }
            for fp in sorted(m.fingerprints, key=lambda f: f.location_id)
        ],
    }


def _report_to_json(r) -> dict:
    return {
        "label": r.label,
        "mean_error_m": None if r.mean_error_m is None else f"{r.mean_error_m:.3f}",
        "paper_reference_m": r.paper_reference_m,
        "rss_series": {
            stream: {str(lid): f"{v:.3f}" for lid, v in sorted(series.items())}
            for stream, series in sorted(r.rss_series.items())
        },
        "extra": {k: f"{v:.3f}" for k, v in sorted(r.extra.items())},
    }


def create_app(workers: int = 4) -> FastAPI:
    app = FastAPI(title="wavescope", docs_url=None, redoc_url=None)
    store = Store(workers=workers)
    app.state.store = store

    @app.post("/api/scenes", status_code=201)
    async def create_scene(document: dict):
        try:
            bundle = load_bundle(document)
        except SceneError as exc:
            return _problem(400, "invalid scene document", pointer=exc.path,
                            detail=str(exc))
        sid = _scene_id(document)
        with store.lock:
            store.scenes.setdefault(sid, (document, bundle))
        return {"scene_id": sid}

    @app.get("/api/scenes/{scene_id}")
    async def get_scene(scene_id: str):
        entry = store.scenes.get(scene_id)
        if entry is None:
            return _problem(404, "unknown scene", pointer=scene_id)
        return {"scene_id": scene_id, "document": entry[0]}

    @app.post("/api/heatmaps", status_code=202)
    async def heatmap(request: dict):
        scene_id = request.get("scene_id")
        entry = store.scenes.get(scene_id)
        if entry is None:
            return _problem(404, "unknown scene", pointer=str(scene_id))
        _, bundle = entry
        tx_id = request.get("tx_id")
        try:
            tx = bundle.transceiver(tx_id)
        except KeyError:
            return _problem(400, "unknown transmitter", pointer=str(tx_id))
        resolution = float(request.get("resolution_m", 0.25))
        height = float(request.get("height_m", 1.2))
        if resolution <= 0:
            return _problem(400, "resolution must be positive", pointer="resolution_m")
        scene = bundle.scene
        nx = int(np.floor((scene.bounds_max[0] - scene.bounds_min[0]) / resolution)) + 1
        ny = int(np.floor((scene.bounds_max[1] - scene.bounds_min[1]) / resolution)) + 1
        if nx < 1 or ny < 1 or nx * ny == 0:
            return _problem(400, "grid has no cells", pointer="resolution_m")
        if "frequency_hz" in request:
            from dataclasses import replace
            tx = replace(tx, frequency_hz=float(request["frequency_hz"]))
        config = _config(request.get("config"))

        def work():
            xs, ys, values = rss_grid(scene, tx, nx, ny, height, config)
            return {
                "kind_tag": "heatmap",
                "origin": [round(float(xs[0]), 3), round(float(ys[0]), 3)],
                "resolution_m": resolution,
                "nx": nx,
                "ny": ny,
                "tx_id": tx.id,
                "values_dbm": [
                    [f"{values[j, i]:.3f}" for i in range(nx)] for j in range(ny)
                ],
            }

        return store.submit("heatmap", work).to_json()

    @app.post("/api/radiomaps", status_code=202)
    async def radiomaps(request: dict):
        scene_id = request.get("scene_id")
        entry = store.scenes.get(scene_id)
        if entry is None:
            return _problem(404, "unknown scene", pointer=str(scene_id))
        _, bundle = entry
        kind = request.get("kind", "active")
        if kind not in ("active", "passive"):
            return _problem(400, "kind must be active or passive", pointer="kind")
        if not bundle.map_locations:
            return _problem(400, "scene document has no map_locations",
                            pointer="map_locations")
        aps = [t for t in bundle.transceivers if t.role == "access_point"]
        mps = [t for t in bundle.transceivers if t.role == "monitoring_point"]
        if not aps or (kind == "passive" and not mps):
            return _problem(400, "scene lacks the transceivers for this map kind",
                            pointer="transceivers")
        config = _config(request.get("config"))
        threads = int(request.get("threads", 1))

        def work():
            if kind == "active":
                built = rm.build_active_map(
                    bundle.scene, aps, bundle.map_locations,
                    config=config, threads=threads,
                )
            else:
                built = rm.build_passive_map(
                    bundle.scene, aps, mps, bundle.map_locations,
                    config=config, threads=threads,
                )
            payload = _map_to_json(built)
            payload["_map"] = built
            return payload

        return store.submit("radiomap", work).to_json()

    @app.post("/api/localize")
    async def localize(request: dict):
        map_id = request.get("map_id")
        radio_map = store.maps.get(map_id)
        if radio_map is None:
            return _problem(404, "unknown radio map", pointer=str(map_id))
        raw = request.get("observation") or {}
        try:
            obs = Observation(
                {StreamId(*k.split(">")): float(v) for k, v in raw.items()}
            )
        except (TypeError, ValueError):
            return _problem(400, "malformed observation", pointer="observation")
        try:
            lid = localize_nn(radio_map, obs)
        except StreamMismatchError as exc:
            return JSONResponse(
                status_code=409,
                content={
                    "status": 409,
                    "title": "stream mismatch",
                    "pointer": "observation",
                    "detail": str(exc),
                    "expected_streams": exc.expected,
                },
            )
        loc = radio_map.locations[lid]
        fp = radio_map.fingerprint(lid)
        v = np.array([obs.rss[s] for s in radio_map.streams])
        dist = float(np.linalg.norm(radio_map.vector(fp) - v))
        return {
            "location_id": lid,
            "coordinates": [
                None if np.isnan(x) else round(float(x), 3) for x in loc
            ],
            "nn_distance_db": f"{dist:.3f}",
        }

    @app.post("/api/scenarios", status_code=202)
    async def scenarios(request: dict):
        kind = request.get("kind", "all")
        if kind not in ("device_based", "device_free", "all"):
            return _problem(400, "kind must be device_based, device_free or all",
                            pointer="kind")
        overrides = request.get("overrides") or {}
        threads = int(request.get("threads", 1))

        def work():
            reports = []
            if kind in ("device_based", "all"):
                reports += run_device_based_suite(overrides, threads=threads)
            if kind in ("device_free", "all"):
                reports += run_device_free_suite(overrides, threads=threads)
            return {
                "kind_tag": "scenario_suite",
                "reports": [_report_to_json(r) for r in reports],
            }

        return store.submit("scenarios", work).to_json()

    @app.get("/api/jobs/{job_id}")
    async def get_job(job_id: str):
        job = store.jobs.get(job_id)
        if job is None:
            return _problem(404, "unknown job", pointer=job_id)
        return job.to_json()

    @app.get("/api/results/{result_id}")
    async def get_result(result_id: str):
        result = store.results.get(result_id)
        if result is None:
            return _problem(404, "unknown result", pointer=result_id)
        if isinstance(result, dict):
            return {k: v for k, v in result.items() if not k.startswith("_")}
        return result

    return app
