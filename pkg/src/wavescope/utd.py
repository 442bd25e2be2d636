"""Wedge edge diffraction (Kouyoumjian-Pathak form with transition function).

The diffraction coefficient stays finite across shadow and reflection
boundaries; the transition function smoothly hands the compensating half of
the geometrical-optics field over as a boundary is crossed.

Conventions: time factor exp(+j w t), rays carry exp(-j k s); the wedge
exterior spans angles (0, n*pi) measured from face 0, where
n = (2*pi - interior_angle) / pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import fresnel as _fresnel_integrals

from .geometry import EPS, unit

_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


@dataclass(frozen=True)
class Wedge:
    """A straight diffracting edge with its exterior-angle parametrization."""

    point_a: np.ndarray  # edge segment endpoints
    point_b: np.ndarray
    face0_tangent: np.ndarray  # unit, perpendicular to the edge, into face 0
    face0_normal: np.ndarray  # unit outward normal of face 0
    interior_angle: float  # wedge material angle; 0 for a half-plane

    def __post_init__(self):
        object.__setattr__(self, "point_a", np.asarray(self.point_a, dtype=float))
        object.__setattr__(self, "point_b", np.asarray(self.point_b, dtype=float))
        object.__setattr__(self, "face0_tangent", np.asarray(self.face0_tangent, dtype=float))
        object.__setattr__(self, "face0_normal", np.asarray(self.face0_normal, dtype=float))

    @property
    def edge_dir(self) -> np.ndarray:
        return unit(self.point_b - self.point_a)

    @property
    def n_param(self) -> float:
        return (2.0 * math.pi - self.interior_angle) / math.pi

    def azimuth(self, direction: np.ndarray) -> float:
        """Angle of a radial direction from face 0, in [0, 2*pi)."""
        e = self.edge_dir
        perp = direction - np.dot(direction, e) * e
        x = np.dot(perp, self.face0_tangent)
        y = np.dot(perp, np.cross(e, self.face0_tangent))
        phi = math.atan2(y, x)
        return phi + 2.0 * math.pi if phi < 0 else phi


def transition_function(x: np.ndarray) -> np.ndarray:
    """UTD transition function F(x) built on the Fresnel integrals."""
    x = np.asarray(x, dtype=float)
    sqrt_x = np.sqrt(np.maximum(x, 0.0))
    s, c = _fresnel_integrals(sqrt_x / _SQRT_HALF_PI)
    tail = _SQRT_HALF_PI * ((1.0 - 1.0j) / 2.0 - c + 1.0j * s)
    return 2.0j * sqrt_x * np.exp(1.0j * x) * tail


_BOUNDARY_NUDGE = 1e-4  # radians; far below the transition-layer width


def _term(n: float, k: float, L: float, beta: float, sign: int) -> complex:
    """One cot * F product of the four-term wedge coefficient.

    Exactly on a shadow/reflection boundary the cotangent diverges while the
    transition function vanishes; the product has a finite limit.  We step the
    angle off the singular value by a nudge much smaller than the transition
    layer, which evaluates that limit to numerical accuracy.
    """
    big_n = round((sign * math.pi + beta) / (2.0 * math.pi * n))
    beta_singular = 2.0 * math.pi * n * big_n - sign * math.pi
    offset = beta - beta_singular
    if abs(offset) < _BOUNDARY_NUDGE:
        beta = beta_singular + math.copysign(_BOUNDARY_NUDGE, offset if offset else 1.0)
    a = 2.0 * math.cos((2.0 * math.pi * n * big_n - beta) / 2.0) ** 2
    cot = 1.0 / math.tan((math.pi + sign * beta) / (2.0 * n))
    return cot * complex(transition_function(k * L * a))


def utd_coefficients(
    n: float, k: float, phi: float, phi_p: float, beta0: float, L: float
):
    """Soft and hard wedge diffraction coefficients (D_s, D_h)."""
    pref = -np.exp(-1j * math.pi / 4.0) / (
        2.0 * n * math.sqrt(2.0 * math.pi * k) * math.sin(beta0)
    )
    dm = phi - phi_p
    dp = phi + phi_p
    d1 = _term(n, k, L, dm, +1)
    d2 = _term(n, k, L, dm, -1)
    d3 = _term(n, k, L, dp, +1)
    d4 = _term(n, k, L, dp, -1)
    d_soft = pref * (d1 + d2 - (d3 + d4))
    d_hard = pref * (d1 + d2 + (d3 + d4))
    return complex(d_soft), complex(d_hard)


def snell_point(wedge: Wedge, src: np.ndarray, obs: np.ndarray):
    """Stationary-phase point on the edge (equal-angle / Keller cone).

    Returns the point, or None when it falls outside the edge segment.
    """
    e = wedge.edge_dir
    a0 = wedge.point_a
    length = float(np.linalg.norm(wedge.point_b - wedge.point_a))
    s_src = float(np.dot(src - a0, e))
    s_obs = float(np.dot(obs - a0, e))
    r_src = float(np.linalg.norm(src - a0 - s_src * e))
    r_obs = float(np.linalg.norm(obs - a0 - s_obs * e))
    if r_src < EPS or r_obs < EPS:
        return None
    s_star = (s_src * r_obs + s_obs * r_src) / (r_src + r_obs)
    if s_star < EPS or s_star > length - EPS:
        return None
    return a0 + s_star * e


def utd_diffraction(
    wedge: Wedge,
    src: np.ndarray,
    obs: np.ndarray,
    e_field: np.ndarray,
    frequency: float,
):
    """Diffracted field contribution of one edge between a source and observer.

    ``e_field`` is the complex polarization vector of the incident ray at the
    source (unit spreading; the 1/s' incident spreading and the diffracted-ray
    spreading are applied here).  Returns (field vector at the observer,
    unfolded path length s' + s), or None when no valid cone point exists or
    the observer sits inside the wedge material.
    """
    q = snell_point(wedge, src, obs)
    if q is None:
        return None
    e = wedge.edge_dir
    s_in = q - src
    s_out = obs - q
    sp = float(np.linalg.norm(s_in))
    s = float(np.linalg.norm(s_out))
    if sp < EPS or s < EPS:
        return None
    s_in = s_in / sp
    s_out = s_out / s

    n = wedge.n_param
    phi_p = wedge.azimuth(-s_in)  # back toward the source
    phi = wedge.azimuth(s_out)
    if phi_p > n * math.pi or phi > n * math.pi:
        return None  # inside the wedge material
    cos_b = float(np.clip(np.dot(s_in, e), -1.0, 1.0))
    beta0 = math.acos(cos_b)
    sin_b = math.sin(beta0)
    if sin_b < 1e-6:
        return None  # paraxial along the edge; no cone

    k = 2.0 * math.pi * frequency / 299792458.0
    L = s * sp * sin_b * sin_b / (s + sp)
    d_soft, d_hard = utd_coefficients(n, k, phi, phi_p, beta0, L)

    # Edge-fixed polarization bases (incident primed, diffracted unprimed).
    phi_hat_p = unit(-np.cross(e, s_in))
    beta_hat_p = np.cross(phi_hat_p, s_in)
    phi_hat = unit(np.cross(e, s_out))
    beta_hat = np.cross(phi_hat, s_out)

    amp = math.sqrt(sp / (s * (s + sp)))  # spherical-wave spreading factor
    e_beta = complex(np.dot(e_field, beta_hat_p))
    e_phi = complex(np.dot(e_field, phi_hat_p))
    field = (-d_soft * e_beta * beta_hat - d_hard * e_phi * phi_hat) * amp / sp
    return field, sp + s
