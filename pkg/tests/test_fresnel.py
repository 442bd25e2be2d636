import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavescope.fresnel import fresnel_coefficients, slab_coefficients
from wavescope.materials import DEFAULT_MATERIALS, Material

FREQ = 2.4e9


def lossless(eps_r):
    return Material("lossless", relative_permittivity=eps_r, conductivity=0.0,
                    thickness=0.1)


@given(
    eps_r=st.floats(min_value=1.5, max_value=12.0),
    angle=st.floats(min_value=0.0, max_value=math.pi / 2 - 1e-3),
)
@settings(max_examples=200)
def test_lossless_interface_power_conservation(eps_r, angle):
    """Reflectance + transmittance = 1 for both polarizations, within 1e-6.

    With these E-field coefficient conventions the transmittance factor is
    Re(q2)/q1 for s and p alike (q1 = cos(incidence), q2 = sqrt(eps - sin^2)).
    """
    mat = lossless(eps_r)
    c = fresnel_coefficients(angle, mat, FREQ)
    q1 = math.cos(angle)
    q2 = complex(np.sqrt(eps_r - math.sin(angle) ** 2))
    ratio = q2.real / q1
    balance_s = abs(c.R_perpendicular) ** 2 + abs(c.T_perpendicular) ** 2 * ratio
    balance_p = abs(c.R_parallel) ** 2 + abs(c.T_parallel) ** 2 * ratio
    assert abs(balance_s - 1.0) < 1e-6
    assert abs(balance_p - 1.0) < 1e-6


def test_pec_magnitudes_exact():
    c = fresnel_coefficients(0.7, DEFAULT_MATERIALS["metal"], FREQ)
    assert abs(c.R_parallel) == 1.0
    assert abs(c.R_perpendicular) == 1.0
    assert c.T_parallel == 0 and c.T_perpendicular == 0
    assert c.R_parallel == 1.0 + 0j and c.R_perpendicular == -1.0 + 0j


def test_brewster_angle_nulls_parallel_reflection():
    eps_r = 4.0
    mat = lossless(eps_r)
    brewster = math.atan(math.sqrt(eps_r))
    c = fresnel_coefficients(brewster, mat, FREQ)
    assert abs(c.R_parallel) < 1e-6
    assert abs(c.R_perpendicular) > 0.1


def test_normal_incidence_magnitudes_equal():
    mat = lossless(4.0)
    c = fresnel_coefficients(0.0, mat, FREQ)
    # (1-n)/(1+n) with n=2 -> magnitude 1/3; s and p bases differ in sign.
    assert abs(c.R_perpendicular) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert abs(c.R_parallel) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert c.R_perpendicular.real < 0 < c.R_parallel.real


def test_grazing_limit_both_minus_one():
    mat = lossless(4.0)
    c = fresnel_coefficients(math.pi / 2 - 1e-12, mat, FREQ)
    assert c.R_parallel == -1.0 + 0j
    assert c.R_perpendicular == -1.0 + 0j


def test_reflection_magnitude_grows_toward_grazing():
    mat = lossless(5.0)
    mags = [
        abs(fresnel_coefficients(a, mat, FREQ).R_perpendicular)
        for a in np.linspace(0.0, 1.5, 12)
    ]
    assert all(m2 >= m1 - 1e-12 for m1, m2 in zip(mags, mags[1:]))


def test_slab_transmission_attenuates_with_conductivity():
    lossy = Material("lossy", 4.0, conductivity=0.05, thickness=0.2)
    free = lossless(4.0)
    t_lossy = abs(slab_coefficients(0.3, lossy, FREQ).T_perpendicular)
    t_free = abs(slab_coefficients(0.3, free, FREQ).T_perpendicular)
    assert t_lossy < t_free


def test_slab_reflection_equals_interface_reflection():
    mat = DEFAULT_MATERIALS["brick"]
    iface = fresnel_coefficients(0.5, mat, FREQ)
    slab = slab_coefficients(0.5, mat, FREQ)
    assert slab.R_parallel == iface.R_parallel
    assert slab.R_perpendicular == iface.R_perpendicular


def test_angle_out_of_range_rejected():
    with pytest.raises(ValueError):
        fresnel_coefficients(-0.1, lossless(4.0), FREQ)
    with pytest.raises(ValueError):
        fresnel_coefficients(math.pi, lossless(4.0), FREQ)
