"""Reflection and transmission at material boundaries.

Half-space Fresnel coefficients for an air-to-material interface, plus the
single-pass slab coefficients the tracer applies when a ray crosses a wall of
finite thickness.  Perpendicular (s) means the electric field is normal to the
plane of incidence; parallel (p) means it lies in it.  Sign convention: at
grazing incidence both coefficients tend to -1; at normal incidence the s and
p coefficients differ in sign (basis orientation), with equal magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .materials import Material

GRAZING_TOL = 1e-9


@dataclass(frozen=True)
class FresnelCoefficients:
    R_parallel: complex
    R_perpendicular: complex
    T_parallel: complex
    T_perpendicular: complex


def fresnel_coefficients(
    incidence_angle: float, material: Material, frequency: float
) -> FresnelCoefficients:
    """Interface (half-space) coefficients at the given incidence angle.

    The angle is measured from the surface normal, in [0, pi/2).
    """
    if not 0.0 <= incidence_angle < math.pi / 2 + GRAZING_TOL:
        raise ValueError(f"incidence angle {incidence_angle} outside [0, pi/2)")
    if frequency <= 0:
        raise ValueError("frequency must be > 0")
    if material.is_perfect_conductor:
        return FresnelCoefficients(1.0 + 0j, -1.0 + 0j, 0j, 0j)
    if incidence_angle >= math.pi / 2 - GRAZING_TOL:
        return FresnelCoefficients(-1.0 + 0j, -1.0 + 0j, 0j, 0j)

    eps = material.complex_permittivity(frequency)
    sin2 = math.sin(incidence_angle) ** 2
    q1 = math.cos(incidence_angle)
    q2 = np.sqrt(eps - sin2)  # principal branch: decaying transmitted wave

    r_s = (q1 - q2) / (q1 + q2)
    t_s = 2.0 * q1 / (q1 + q2)
    r_p = (eps * q1 - q2) / (eps * q1 + q2)
    t_p = 2.0 * np.sqrt(eps) * q1 / (eps * q1 + q2)
    return FresnelCoefficients(complex(r_p), complex(r_s), complex(t_p), complex(t_s))


def slab_coefficients(
    incidence_angle: float, material: Material, frequency: float
) -> FresnelCoefficients:
    """Coefficients for a wall slab of the material's thickness.

    Reflection is the front-interface coefficient; transmission is the
    two-interface single-pass product including the excess propagation
    phase/attenuation through the slab (internal multiples neglected).
    """
    iface = fresnel_coefficients(incidence_angle, material, frequency)
    if material.is_perfect_conductor or abs(iface.T_perpendicular) == 0.0:
        return FresnelCoefficients(iface.R_parallel, iface.R_perpendicular, 0j, 0j)

    eps = material.complex_permittivity(frequency)
    sin2 = math.sin(incidence_angle) ** 2
    q1 = math.cos(incidence_angle)
    q2 = np.sqrt(eps - sin2)
    k0 = 2.0 * math.pi * frequency / 299792458.0
    excess = np.exp(-1j * k0 * material.thickness * (q2 - q1))

    t_pair_s = 4.0 * q1 * q2 / (q1 + q2) ** 2
    t_pair_p = 4.0 * eps * q1 * q2 / (eps * q1 + q2) ** 2
    return FresnelCoefficients(
        iface.R_parallel,
        iface.R_perpendicular,
        complex(t_pair_p * excess),
        complex(t_pair_s * excess),
    )
