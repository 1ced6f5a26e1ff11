import math

import numpy as np
import pytest
from scipy import special

from waveharm import oracle


@pytest.mark.parametrize("x", [0.05, 0.7, 1.0, 3.3, 12.0, 40.0])
def test_spherical_bessel_against_scipy(x):
    for n in range(0, 25):
        j = oracle.sph_j(n, x)
        assert j == pytest.approx(special.spherical_jn(n, x), rel=1e-12, abs=1e-300)
        if n < 12 or x > 2:
            assert oracle.sph_y(n, x) == pytest.approx(special.spherical_yn(n, x), rel=1e-12)


def test_wronskian():
    for x in (0.4, 2.0, 9.0):
        for n in range(10):
            w = oracle.sph_j(n + 1, x) * oracle.sph_y(n, x) - oracle.sph_j(n, x) * oracle.sph_y(n + 1, x)
            assert w == pytest.approx(1 / x**2, rel=1e-12)


def test_outgoing_wave_normalization():
    t = 2.5
    assert oracle.outgoing_wave(0, t) == pytest.approx(np.exp(1j * t) / t, rel=1e-14)
    assert oracle.outgoing_wave(1, t) == pytest.approx(np.exp(1j * t) / t * (1 + 1j / t), rel=1e-14)


def test_ylm_against_scipy():
    th, ph = 0.9, 2.1
    for l in range(5):
        for m in range(-l, l + 1):
            if hasattr(special, "sph_harm_y"):
                ref = special.sph_harm_y(l, m, th, ph)
            else:
                ref = special.sph_harm(m, l, ph, th)
            assert oracle.ylm(l, m, th, ph) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_mie_series_converges():
    sigma, n = oracle.sphere_plane_wave_sigma(1.0, 1.0, return_terms=True)
    assert n < 30
    # low-frequency limit of a sound-soft sphere: 4 pi a^2
    assert oracle.sphere_plane_wave_sigma(1e-4, 1.0) == pytest.approx(4 * math.pi, rel=1e-3)


def test_sphere_mode_solution_trace():
    p = np.array([[0.0, 0.6, 0.8]])
    val = oracle.sphere_mode_solution(2, 1, 1.0, 1.5, p)[0]
    assert val == pytest.approx(oracle.ylm(2, 1, math.acos(0.8), math.pi / 2) * oracle.outgoing_wave(2, 1.5))
    with pytest.raises(ValueError):
        oracle.sphere_mode_solution(0, 0, 1.0, 1.0, np.array([[0.1, 0, 0]]))


def test_sphere_oracle_bundle():
    o = oracle.SphereOracle(1.0, 1.0, 4)
    assert o.sigma() == oracle.sphere_plane_wave_sigma(1.0, 1.0)
    assert o.amplitudes().shape == (25,)
