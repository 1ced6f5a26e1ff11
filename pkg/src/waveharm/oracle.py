"""Independent reference values for verification.

Nothing here uses the package's special-function, harmonic or quadrature
code: harmonics come from ``scipy.special.lpmv``, spherical Bessel functions
from recurrences written out below in the standard normalization, and
surface integrals from composite Simpson in theta. Conversion to the
polynomial wave normalization ``h_n = i**(n+1) h_n^(1)`` happens only at the
comparison boundary (:func:`outgoing_wave`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "SphereOracle",
    "brute_force_gram",
    "outgoing_wave",
    "outgoing_wave_derivative",
    "sph_h1",
    "sph_j",
    "sph_y",
    "sphere_gram_entry",
    "sphere_mode_dtn",
    "sphere_mode_solution",
    "sphere_plane_wave_amplitudes",
    "sphere_plane_wave_moments",
    "sphere_plane_wave_sigma",
    "ylm",
]


def sph_y(n: int, x: float) -> float:
    """Spherical Neumann function by upward recurrence (stable for all ``x``)."""
    y0 = -math.cos(x) / x
    if n == 0:
        return y0
    y1 = -math.cos(x) / x**2 - math.sin(x) / x
    for l in range(1, n):
        y0, y1 = y1, (2 * l + 1) / x * y1 - y0
    return y1


def sph_j(n: int, x: float) -> float:
    """Spherical Bessel function of the first kind.

    Upward recurrence for ``x > n + 1/2``; otherwise Miller's downward
    recurrence normalized through ``j_{n+1} y_n - j_n y_{n+1} = 1/x**2``.
    """
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if n == 0:
        return math.sin(x) / x
    if x > n + 0.5:
        # upward series is stable here; use the closed forms and recur
        j0, j1 = math.sin(x) / x, math.sin(x) / x**2 - math.cos(x) / x
        for l in range(1, n):
            j0, j1 = j1, (2 * l + 1) / x * j1 - j0
        return j1
    top = n + 40 + int(2 * x)
    jp, jc = 0.0, 1e-280  # unnormalized j_{l+1}, j_l starting at l = top
    for l in range(top, n, -1):
        jp, jc = jc, (2 * l + 1) / x * jc - jp
        if abs(jc) > 1e250:
            jp *= 1e-250
            jc *= 1e-250
    # jc ~ j_n, jp ~ j_{n+1}; normalize with j_{n+1} y_n - j_n y_{n+1} = 1/x^2
    scale = (1.0 / x**2) / (jp * sph_y(n, x) - jc * sph_y(n + 1, x))
    return jc * scale


def sph_h1(n: int, x: float) -> complex:
    return complex(sph_j(n, x), sph_y(n, x))


def sph_h1_derivative(n: int, x: float) -> complex:
    if n == 0:
        return -sph_h1(1, x)
    return sph_h1(n - 1, x) - (n + 1) / x * sph_h1(n, x)


def outgoing_wave(n: int, x: float) -> complex:
    """``i**(n+1) h_n^(1)(x)``, i.e. the polynomial normalization used by the solver."""
    return (1j) ** (n + 1) * sph_h1(n, x)


def outgoing_wave_derivative(n: int, x: float) -> complex:
    return (1j) ** (n + 1) * sph_h1_derivative(n, x)


def ylm(l: int, m: int, theta, phi):
    """Orthonormal spherical harmonic with Condon-Shortley phase via ``lpmv``."""
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    am = abs(m)
    norm = math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - am) / math.factorial(l + am))
    val = norm * special.lpmv(am, l, np.cos(theta)) * np.exp(1j * am * phi)
    if m < 0:
        val = (-1) ** am * np.conj(val)
    return val


def _index(n: int) -> tuple[int, int]:
    l = math.isqrt(n)
    r = n - l * l
    if r == 0:
        return l, 0
    a = (r + 1) // 2
    return l, (-a if r % 2 else a)


def sphere_plane_wave_sigma(k: float, a: float = 1.0, tol: float = 1e-16, return_terms: bool = False):
    """Total cross section of a sound-soft sphere: ``(4 pi / k^2) sum (2n+1) |j_n/h_n|^2``.

    The series stops once a term drops below ``tol`` times the running sum.
    """
    ka = k * a
    total = 0.0
    n = 0
    while True:
        term = (2 * n + 1) * abs(sph_j(n, ka) / sph_h1(n, ka)) ** 2
        total += term
        n += 1
        if term < tol * total or n > 200:
            break
    sigma = 4 * math.pi / k**2 * total
    return (sigma, n) if return_terms else sigma


def sphere_plane_wave_amplitudes(k: float, a: float, lmax: int) -> np.ndarray:
    """Far-field coefficients (index order) of the radiating field equal to
    ``exp(i k z)`` on the sphere: ``A_l0 = i^l sqrt(4 pi (2l+1)) j_l(ka) / (k h_l(ka))``."""
    count = (lmax + 1) ** 2
    A = np.zeros(count, dtype=np.complex128)
    for l in range(lmax + 1):
        A[l * l] = (1j) ** l * math.sqrt(4 * math.pi * (2 * l + 1)) * sph_j(l, k * a) / (k * outgoing_wave(l, k * a))
    return A


def _theta_overlap(l1: int, l2: int, m: int) -> float:
    """``int_0^pi Ybar_{l1 m} Ybar_{l2 m} dtheta`` for the theta parts (no sin weight)."""
    f = lambda t: float(np.real(ylm(l1, m, t, 0.0) * np.conj(ylm(l2, m, t, 0.0))))
    val, _ = integrate.quad(f, 0.0, math.pi, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def sphere_gram_entry(k: float, R: float, i: int, j: int) -> complex:
    """Closed form of ``g_ij`` on the sphere ``|r| = R`` (ranks ``i``, ``j``)."""
    li, mi = _index(i)
    lj, mj = _index(j)
    if mi != mj:
        return 0.0j
    return 2 * math.pi * outgoing_wave(li, k * R) * np.conj(outgoing_wave(lj, k * R)) * _theta_overlap(li, lj, mi)


def sphere_plane_wave_moments(k: float, a: float, lmax: int, extra: int = 25) -> np.ndarray:
    """Moments ``u_p`` of ``exp(i k z)`` on the sphere from the Jacobi-Anger expansion."""
    count = (lmax + 1) ** 2
    u = np.zeros(count, dtype=np.complex128)
    coef = [(1j) ** l * math.sqrt(4 * math.pi * (2 * l + 1)) * sph_j(l, k * a) for l in range(lmax + extra + 1)]
    for lp in range(lmax + 1):
        acc = 0.0j
        for l, c in enumerate(coef):
            acc += c * 2 * math.pi * _theta_overlap(l, lp, 0)
        u[lp * lp] = acc * np.conj(outgoing_wave(lp, k * a))
    return u


def sphere_mode_solution(l: int, m: int, a: float, k: float, r) -> np.ndarray:
    """Exact radiating solution with trace ``Y_lm h_l(ka)`` on ``|r| = a``."""
    p = np.atleast_2d(np.asarray(r, float))
    rho = np.linalg.norm(p, axis=-1)
    if np.any(rho < a * (1 - 1e-12)):
        raise ValueError("sphere_mode_solution is defined outside the sphere only")
    th = np.arccos(np.clip(p[:, 2] / rho, -1, 1))
    ph = np.arctan2(p[:, 1], p[:, 0])
    h = np.array([outgoing_wave(l, k * x) for x in rho])
    return ylm(l, m, th, ph) * h


def sphere_mode_dtn(l: int, m: int, a: float, k: float, theta, phi):
    """Normal derivative of the sphere mode solution on the boundary: ``k h_l'(ka) Y_lm``."""
    return k * outgoing_wave_derivative(l, k * a) * ylm(l, m, theta, phi)


def _oracle_radius(surface, theta, phi):
    """Radius from the surface description, evaluated with oracle harmonics."""
    from .surface import HarmonicStarSurface, RevolutionPolyline, Sphere

    if isinstance(surface, Sphere):
        return np.full(np.shape(theta), float(surface.R))
    if isinstance(surface, HarmonicStarSurface):
        rho = np.zeros(np.shape(theta), dtype=np.complex128)
        for n in np.flatnonzero(surface.a):
            l, m = _index(int(n))
            rho += surface.a[n] * ylm(l, m, theta, phi)
        return 1.0 / rho.real
    if isinstance(surface, RevolutionPolyline):
        th = np.asarray(theta, float)
        out = np.empty(th.shape)
        bp = np.asarray(surface.breakpoints)
        for i in range(len(bp) - 1):
            sel = (th >= bp[i]) & (th <= bp[i + 1])
            a, b, f = surface.a_coef[i], surface.b_coef[i], surface.f_coef[i]
            out[sel] = f / (a * np.cos(th[sel]) + b * np.sin(th[sel]))
        return out
    return surface.radius(theta, phi)


def brute_force_gram(surface, k: float, i: int, j: int, n_theta: int = 1201, n_phi: int = 128) -> complex:
    """``g_ij`` by composite Simpson in theta and the periodic rectangle rule in phi.

    For a polyline body Simpson runs separately on each segment.
    """
    li, mi = _index(i)
    lj, mj = _index(j)
    bp = list(getattr(surface, "breakpoints", (0.0, math.pi)))
    per = max(3, (n_theta // max(len(bp) - 1, 1)) | 1)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    total = 0.0j
    for lo, hi in zip(bp[:-1], bp[1:]):
        th = np.linspace(lo, hi, per)
        TH, PH = np.meshgrid(th, phi, indexing="ij")
        r = _oracle_radius(surface, TH, PH)
        hi_v = np.vectorize(lambda x: outgoing_wave(li, k * x))(r)
        hj_v = np.vectorize(lambda x: outgoing_wave(lj, k * x))(r)
        F = ylm(li, mi, TH, PH) * np.conj(ylm(lj, mj, TH, PH)) * hi_v * np.conj(hj_v)
        inner = F.sum(axis=1) * (2 * math.pi / n_phi)
        total += integrate.simpson(inner.real, x=th) + 1j * integrate.simpson(inner.imag, x=th)
    return complex(total)


@dataclass(frozen=True)
class SphereOracle:
    """Bundle of sphere reference values for one radius and wavenumber."""

    a: float
    k: float
    lmax: int

    def sigma(self) -> float:
        return sphere_plane_wave_sigma(self.k, self.a)

    def amplitudes(self) -> np.ndarray:
        return sphere_plane_wave_amplitudes(self.k, self.a, self.lmax)

    def mode(self, l: int, m: int, r):
        return sphere_mode_solution(l, m, self.a, self.k, r)

    def mode_dtn(self, l: int, m: int, theta, phi):
        return sphere_mode_dtn(l, m, self.a, self.k, theta, phi)
