"""Nearest-neighbor fingerprint localization and accuracy evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .radiomap import Fingerprint, RadioMap, StreamId


class StreamMismatchError(ValueError):
    """Observation stream set does not match the radio map under evaluation."""

    def __init__(self, expected, got):
        self.expected = sorted(s.label() for s in expected)
        self.got = sorted(s.label() for s in got)
        super().__init__(
            f"stream mismatch: map has {self.expected}, observation has {self.got}"
        )


@dataclass
class Observation:
    rss: Dict[StreamId, float]
    truth_location: Optional[np.ndarray] = None


@dataclass
class LocalizationReport:
    per_observation: List[Tuple[int, float]]  # (estimated location_id, error m)
    mean_error: float
    per_location_error: Dict[tuple, float]  # truth (x, y) -> mean error


def localize_nn(radio_map: RadioMap, obs: Observation) -> int:
    """Location id of the fingerprint nearest in RSS space.

    Ties resolve to the lowest location id; for passive maps location 0
    (silence) is a valid answer.
    """
    if not radio_map.fingerprints:
        raise ValueError("empty radio map")
    if set(obs.rss) != set(radio_map.streams):
        raise StreamMismatchError(radio_map.streams, obs.rss.keys())
    v = np.array([obs.rss[s] for s in radio_map.streams])
    best_id = None
    best_d2 = np.inf
    for fp in sorted(radio_map.fingerprints, key=lambda f: f.location_id):
        d2 = float(np.sum((radio_map.vector(fp) - v) ** 2))
        if d2 < best_d2:
            best_d2 = d2
            best_id = fp.location_id
    return best_id


def evaluate(train: RadioMap, test: Sequence[Observation]) -> LocalizationReport:
    """Mean horizontal localization error of a test set against a trained map."""
    if not test:
        raise ValueError("empty test set")
    per_obs = []
    buckets: Dict[tuple, List[float]] = {}
    for obs in test:
        if obs.truth_location is None:
            raise ValueError("every test observation needs a truth location")
        est = localize_nn(train, obs)
        est_loc = train.locations[est]
        truth = np.asarray(obs.truth_location, dtype=float)
        if np.any(np.isnan(est_loc)):
            # Silence answered for a real entity: score against the centroid
            # of the map locations (a defined, deterministic miss distance).
            real = [l for k, l in train.locations.items() if k != 0]
            centroid = np.mean(np.array(real), axis=0)
            err = float(np.linalg.norm(centroid[:2] - truth[:2]))
        else:
            err = float(np.linalg.norm(est_loc[:2] - truth[:2]))
        per_obs.append((est, err))
        buckets.setdefault((round(truth[0], 3), round(truth[1], 3)), []).append(err)
    mean_error = float(np.mean([e for _, e in per_obs]))
    per_location = {k: float(np.mean(v)) for k, v in buckets.items()}
    return LocalizationReport(per_obs, mean_error, per_location)


def observations_from_map(
    test_map: RadioMap,
    noise_sigma_db: float = 0.0,
    trials: int = 1,
    seed: int = 0,
    include_silence: bool = False,
) -> List[Observation]:
    """Test observations from a map's fingerprints, optionally noise-perturbed.

    The simulator is deterministic, so test-set variability comes from this
    seeded Gaussian layer (sigma 0 disables it).
    """
    rng = np.random.default_rng(seed)
    out = []
    for fp in sorted(test_map.fingerprints, key=lambda f: f.location_id):
        if fp.location_id == 0 and not include_silence:
            continue
        truth = test_map.locations[fp.location_id]
        for _ in range(max(1, trials)):
            rss = dict(fp.rss)
            if noise_sigma_db > 0.0:
                for s in test_map.streams:
                    rss[s] = fp.rss[s] + noise_sigma_db * rng.standard_normal()
            out.append(Observation(rss, truth))
    return out
