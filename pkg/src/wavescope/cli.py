"""Command-line interface: simulation, map building, localization, suites.

Exit codes: 0 success, 2 bad arguments, 3 scene/schema error, 4 internal
invariant violation.  Machine-readable output goes to files or stdout;
diagnostics go to stderr.
"""

from __future__ import annotations

import json
import logging
import os
import sys

import click
import numpy as np
import yaml

from . import radiomap as rm
from .localization import Observation, localize_nn
from .radiomap import RadioMap, StreamId
from .scene import SceneBundle, SceneError, load_bundle_file
from .scenarios import run_device_based_suite, run_device_free_suite
from .tracer import PropagationConfig, predict_rss, rss_grid

log = logging.getLogger("wavescope")

EXIT_BAD_ARGS = 2
EXIT_SCENE_ERROR = 3
EXIT_INTERNAL = 4


def _fail(code: int, message: str):
    log.error(message)
    sys.exit(code)


def _load_bundle(scene_path) -> SceneBundle:
    try:
        return load_bundle_file(scene_path)
    except FileNotFoundError:
        _fail(EXIT_BAD_ARGS, f"scene file not found: {scene_path}")
    except (SceneError, yaml.YAMLError) as exc:
        _fail(EXIT_SCENE_ERROR, f"invalid scene: {exc}")


def _config_from(config_path, quantize_rss) -> PropagationConfig:
    doc = {}
    if config_path:
        with open(config_path) as fh:
            doc = yaml.safe_load(fh) or {}
    kwargs = {
        k: doc[k]
        for k in ("max_depth", "min_power_dbm", "tessellation_order",
                  "max_diffraction_order", "quantize_rss")
        if k in doc
    }
    if quantize_rss:
        kwargs["quantize_rss"] = True
    try:
        return PropagationConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        _fail(EXIT_BAD_ARGS, f"invalid propagation config: {exc}")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Verbose logging to stderr.")
def main(verbose):
    """Indoor WiFi ray-tracing simulator and localization toolkit."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--scene", "scene_path", required=True, type=click.Path())
@click.option("--tx", "tx_id", required=True, help="Transmitter transceiver id.")
@click.option("--rx", "rx_id", default=None, help="Receiver transceiver id.")
@click.option("--grid", default=None, metavar="NXxNY",
              help="Heatmap grid dimensions over the scene footprint.")
@click.option("--grid-height", default=1.2, show_default=True, type=float)
@click.option("--out", "out_path", default="-", help="Output file ('-' = stdout).")
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--frequency-hz", default=None, type=float,
              help="Override the transmitter frequency.")
@click.option("--quantize-rss", is_flag=True, help="Round RSS to whole dBm.")
def simulate(scene_path, tx_id, rx_id, grid, grid_height, out_path,
             config_path, frequency_hz, quantize_rss):
    """Predict RSS for one receiver or over a heatmap grid."""
    bundle = _load_bundle(scene_path)
    config = _config_from(config_path, quantize_rss)
    try:
        tx = bundle.transceiver(tx_id)
    except KeyError:
        _fail(EXIT_BAD_ARGS, f"unknown transmitter id {tx_id!r}")
    if frequency_hz:
        from dataclasses import replace
        tx = replace(tx, frequency_hz=frequency_hz)

    lines = []
    try:
        if grid:
            try:
                nx, ny = (int(v) for v in grid.lower().split("x"))
            except ValueError:
                _fail(EXIT_BAD_ARGS, f"bad grid spec {grid!r}; expected NXxNY")
            xs, ys, values = rss_grid(bundle.scene, tx, nx, ny, grid_height, config)
            lines.append("x,y,rss_dbm")
            for j, y in enumerate(ys):
                for i, x in enumerate(xs):
                    lines.append(f"{x:.3f},{y:.3f},{values[j, i]:.3f}")
        elif rx_id:
            try:
                rx = bundle.transceiver(rx_id)
            except KeyError:
                _fail(EXIT_BAD_ARGS, f"unknown receiver id {rx_id!r}")
            lines.append(f"{predict_rss(bundle.scene, tx, rx, config):.3f}")
        else:
            _fail(EXIT_BAD_ARGS, "need either --rx or --grid")
    except SceneError as exc:
        _fail(EXIT_SCENE_ERROR, str(exc))
    except (ValueError, ArithmeticError) as exc:
        _fail(EXIT_INTERNAL, f"internal error: {exc}")

    text = "\n".join(lines) + "\n"
    if out_path == "-":
        click.echo(text, nl=False)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)
        log.info("wrote %s", out_path)


@main.command("map")
@click.option("--scene", "scene_path", required=True, type=click.Path())
@click.option("--kind", type=click.Choice(["active", "passive"]), required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--threads", default=os.cpu_count() or 1, show_default=True, type=int)
@click.option("--quantize-rss", is_flag=True)
def build_map(scene_path, kind, out_path, config_path, threads, quantize_rss):
    """Build a radio map from a scene document's transceivers and locations."""
    bundle = _load_bundle(scene_path)
    config = _config_from(config_path, quantize_rss)
    aps = [t for t in bundle.transceivers if t.role == "access_point"]
    mps = [t for t in bundle.transceivers if t.role == "monitoring_point"]
    if not bundle.map_locations:
        _fail(EXIT_BAD_ARGS, "scene document has no map_locations")
    try:
        if kind == "active":
            built = rm.build_active_map(
                bundle.scene, aps, bundle.map_locations, config=config, threads=threads
            )
        else:
            if not mps:
                _fail(EXIT_BAD_ARGS, "passive map needs monitoring_point transceivers")
            built = rm.build_passive_map(
                bundle.scene, aps, mps, bundle.map_locations,
                config=config, threads=threads,
            )
    except SceneError as exc:
        _fail(EXIT_SCENE_ERROR, str(exc))
    except ValueError as exc:
        _fail(EXIT_BAD_ARGS, str(exc))
    built.save(out_path)
    log.info("wrote %s (%d fingerprints)", out_path, len(built.fingerprints))


@main.command()
@click.option("--map", "map_path", required=True, type=click.Path())
@click.option("--observation", "obs_path", required=True, type=click.Path(),
              help="JSON file mapping stream labels (tx>rx) to RSS dBm.")
def localize(map_path, obs_path):
    """Nearest-neighbor localization of one observation against a map."""
    try:
        radio_map = RadioMap.load(map_path)
    except (OSError, ValueError) as exc:
        _fail(EXIT_BAD_ARGS, f"cannot load map: {exc}")
    with open(obs_path) as fh:
        raw = json.load(fh)
    rss = {StreamId(*k.split(">")): float(v) for k, v in raw.items()}
    try:
        lid = localize_nn(radio_map, Observation(rss))
    except ValueError as exc:
        _fail(EXIT_BAD_ARGS, str(exc))
    loc = radio_map.locations[lid]
    coords = "nan,nan,nan" if np.any(np.isnan(loc)) else ",".join(f"{v:.3f}" for v in loc)
    click.echo(f"{lid},{coords}")


@main.command()
@click.argument("kind", type=click.Choice(["device-based", "device-free", "all"]))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--threads", default=os.cpu_count() or 1, show_default=True, type=int)
def suite(kind, out_dir, seed, threads):
    """Run the reproduction scenario suites and write their output trees."""
    overrides = {"seed": seed}
    reports = []
    if kind in ("device-based", "all"):
        reports += run_device_based_suite(overrides, out_dir=out_dir, threads=threads)
    if kind in ("device-free", "all"):
        reports += run_device_free_suite(overrides, out_dir=out_dir, threads=threads)
    click.echo(f"{'label':32s} {'mean_error_m':>12s} {'reference_m':>12s}")
    for r in reports:
        me = "-" if r.mean_error_m is None else f"{r.mean_error_m:.3f}"
        pr = "-" if r.paper_reference_m is None else f"{r.paper_reference_m:.2f}"
        click.echo(f"{r.label:32s} {me:>12s} {pr:>12s}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP API service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
