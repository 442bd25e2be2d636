"""Indoor WiFi ray-tracing simulator with fingerprint localization."""

from .fresnel import FresnelCoefficients, fresnel_coefficients, slab_coefficients
from .launch import launch_directions
from .localization import (
    LocalizationReport,
    Observation,
    StreamMismatchError,
    evaluate,
    localize_nn,
    observations_from_map,
)
from .materials import DEFAULT_MATERIALS, Material
from .radiomap import (
    CrowdPattern,
    Fingerprint,
    RadioMap,
    StreamId,
    apply_crowd,
    around_ap,
    build_active_map,
    build_passive_map,
    crowd_positions,
    explicit,
    party,
)
from .scenarios import (
    ScenarioConfig,
    ScenarioReport,
    run_device_based_suite,
    run_device_free_suite,
    run_outsider_experiment,
)
from .scene import (
    HumanCylinder,
    Scene,
    SceneBundle,
    SceneError,
    Surface,
    Transceiver,
    intersect_ray,
    load_bundle,
    load_bundle_file,
    load_scene,
    place_entities,
)
from .testbed import build_paper_testbed, load_testbed
from .tracer import (
    NOISE_FLOOR_DBM,
    PropagationConfig,
    ReceivedRay,
    free_space_rss,
    predict_rss,
    receive,
    rss_grid,
    trace,
)
from .utd import Wedge, utd_coefficients, utd_diffraction

__version__ = "1.0.0"

__all__ = [
    "CrowdPattern",
    "DEFAULT_MATERIALS",
    "Fingerprint",
    "FresnelCoefficients",
    "HumanCylinder",
    "LocalizationReport",
    "Material",
    "NOISE_FLOOR_DBM",
    "Observation",
    "PropagationConfig",
    "RadioMap",
    "ReceivedRay",
    "ScenarioConfig",
    "ScenarioReport",
    "Scene",
    "SceneBundle",
    "SceneError",
    "StreamId",
    "StreamMismatchError",
    "Surface",
    "Transceiver",
    "Wedge",
    "apply_crowd",
    "around_ap",
    "build_active_map",
    "build_paper_testbed",
    "build_passive_map",
    "crowd_positions",
    "evaluate",
    "explicit",
    "free_space_rss",
    "fresnel_coefficients",
    "intersect_ray",
    "launch_directions",
    "load_bundle",
    "load_bundle_file",
    "load_scene",
    "load_testbed",
    "localize_nn",
    "observations_from_map",
    "party",
    "place_entities",
    "predict_rss",
    "receive",
    "rss_grid",
    "run_device_based_suite",
    "run_device_free_suite",
    "run_outsider_experiment",
    "slab_coefficients",
    "trace",
    "utd_coefficients",
    "utd_diffraction",
]
