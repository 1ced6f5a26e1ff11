from __future__ import annotations

import numpy as np
import pytest

from waveharm.surface import HarmonicStarSurface, RevolutionPolyline, Sphere

SQRT4PI = float(np.sqrt(4 * np.pi))

# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def make_sphere(R=1.0):
    return Sphere(R)


def make_perturbed():
    return HarmonicStarSurface({(0, 0): SQRT4PI, (2, 0): 0.1})


def make_cone():
    # r = 1/(cos + sin) on the upper half, 1/(sin - cos) on the lower half
    return RevolutionPolyline([0.0, np.pi / 2, np.pi], [(1.0, 1.0, 1.0), (-1.0, 1.0, 1.0)])


def make_tilted():
    # degree-1 harmonic surface with a non-axisymmetric tilt
    return HarmonicStarSurface({(0, 0): SQRT4PI, (1, 0): 0.2, (1, 1): 0.1 + 0.05j})


@pytest.fixture
def sphere():
    return make_sphere()


@pytest.fixture
def perturbed():
    return make_perturbed()


@pytest.fixture
def cone():
    return make_cone()


@pytest.fixture
def tilted():
    return make_tilted()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_exterior_points(rng, n, rmin, rmax):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * rng.uniform(rmin, rmax, n)[:, None]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
