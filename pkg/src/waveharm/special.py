"""Spherical harmonics and outgoing spherical waves.

The outgoing wave ``h_n`` uses the polynomial normalization

    h_n(t) = exp(i t) / t * sum_{j=0}^{n} hc[n, j] / t**j,   hc[n, 0] = 1,

so every ``h_n(t)`` behaves like ``exp(i t) / t`` at infinity. It differs
from the standard first-kind spherical Hankel function by a phase:
``h_n = i**(n + 1) * h_n^(1)``.

Spherical harmonics are orthonormal on the unit sphere (``sin(theta)``
weighted), carry the Condon-Shortley phase and satisfy
``conj(Y_lm) = (-1)**m * Y_l,-m``. Double precision; intended for degrees
up to about 40 and arguments in ``[1e-3, 1e3]``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .indexing import AngularIndex, index_arrays

__all__ = [
    "HarmonicTable",
    "hankel_coeff",
    "hankel_coeff_table",
    "hankel_table",
    "harmonic_table",
    "legendre_P",
    "sph_harm",
    "spherical_bessel_j",
    "spherical_hankel",
    "spherical_hankel_derivative",
]


@lru_cache(maxsize=None)
def hankel_coeff(n: int, m: int) -> complex:
    """Coefficient ``(i/2)**m (n+m)! / ((n-m)! m!)`` of the outgoing wave series."""
    if n < 0 or m < 0 or m > n:
        raise ValueError(f"hankel_coeff needs 0 <= m <= n, got n={n}, m={m}")
    mag = math.factorial(n + m) // (math.factorial(n - m) * math.factorial(m))
    return (1j) ** m * (mag / 2.0**m)


_table_lock = threading.Lock()
_tables: dict[int, np.ndarray] = {}


def hankel_coeff_table(nmax: int) -> np.ndarray:
    """Read-only ``(nmax+1, nmax+1)`` array of coefficients, zero above ``m > n``."""
    tab = _tables.get(nmax)
    if tab is None:
        with _table_lock:
            tab = _tables.get(nmax)
            if tab is None:
                tab = np.zeros((nmax + 1, nmax + 1), dtype=np.complex128)
                for n in range(nmax + 1):
                    for m in range(n + 1):
                        tab[n, m] = hankel_coeff(n, m)
                tab.setflags(write=False)
                _tables[nmax] = tab
    return tab


def _positive(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)) or np.any(~np.isfinite(t)):
        raise ValueError("outgoing waves are evaluated only at finite t > 0")
    return t


def hankel_table(nmax: int, t) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of ``h_0 .. h_nmax`` at the points ``t``.

    Returns two arrays of shape ``(nmax + 1,) + t.shape``.
    """
    t = _positive(t)
    flat = np.ascontiguousarray(t.ravel())
    h, dh = kernels.hankel_table(np.ascontiguousarray(hankel_coeff_table(nmax)), flat)
    shape = (nmax + 1,) + t.shape
    return h.reshape(shape), dh.reshape(shape)


def spherical_hankel(n: int, t):
    """Outgoing wave ``h_n(t)`` in polynomial normalization."""
    h, _ = hankel_table(n, t)
    return h[n]


def spherical_hankel_derivative(n: int, t):
    """``d h_n / dt`` by term-wise differentiation of the polynomial form."""
    _, dh = hankel_table(n, t)
    return dh[n]


def spherical_bessel_j(n: int, t):
    """Standard spherical Bessel function of the first kind ``j_n(t)``.

    Upward recurrence where it is stable (``t > n``), otherwise Miller's
    downward recurrence normalized by ``j_0``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("spherical_bessel_j needs t >= 0")
    scalar = t.ndim == 0
    tt = np.atleast_1d(t).astype(float)
    out = np.empty_like(tt)
    for q, x in enumerate(tt):
        out[q] = _sph_j_scalar(n, x)
    return out[0] if scalar else out.reshape(t.shape)


def _sph_j_scalar(n: int, x: float) -> float:
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    j0 = math.sin(x) / x
    if n == 0:
        return j0
    if x > n:
        jm, jc = j0, math.sin(x) / x**2 - math.cos(x) / x
        for l in range(1, n):
            jm, jc = jc, (2 * l + 1) / x * jc - jm
        return jc
    start = n + int(math.sqrt(40.0 * (n + 10))) + 20
    jp, jc = 0.0, 1e-300
    val = 0.0
    for l in range(start, 0, -1):
        jm = (2 * l + 1) / x * jc - jp
        jp, jc = jc, jm
        if l - 1 == n:
            val = jc
        if abs(jc) > 1e250:  # rescale to avoid overflow
            jp *= 1e-250
            jc *= 1e-250
            val *= 1e-250
    return val * (j0 / jc)


def legendre_P(n: int, x):
    """Legendre polynomial ``P_n(x)`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise ValueError("legendre_P needs |x| <= 1")
    p0 = np.ones_like(x)
    if n == 0:
        return p0
    p1 = x.copy()
    for l in range(1, n):
        p0, p1 = p1, ((2 * l + 1) * x * p1 - l * p0) / (l + 1)
    return p1


@dataclass(frozen=True)
class HarmonicTable:
    """Spherical harmonics of ranks ``0 .. count-1`` on a point set.

    Attributes
    ----------
    Y : ndarray, shape (count, npts)
    dtheta : ndarray
        ``dY/dtheta``.
    dphi_over_sin : ndarray
        ``(dY/dphi) / sin(theta)``, finite at the poles.
    ls, ms : ndarray of int
    """

    Y: np.ndarray
    dtheta: np.ndarray
    dphi_over_sin: np.ndarray
    ls: np.ndarray
    ms: np.ndarray

    @property
    def count(self) -> int:
        return self.Y.shape[0]

    def conjugate_rows(self) -> np.ndarray:
        """``Y_{l,-m}`` for each row ``(l, m)``, i.e. ``(-1)**m conj(Y_lm)``."""
        sign = np.where(self.ms % 2 == 0, 1.0, -1.0)
        return sign[:, None] * np.conj(self.Y)


def harmonic_table(count: int, theta, phi) -> HarmonicTable:
    """Evaluate the first ``count`` harmonics (in index order) and their angular derivatives."""
    theta = np.ravel(np.asarray(theta, dtype=float))
    phi = np.ravel(np.asarray(phi, dtype=float))
    if theta.shape != phi.shape:
        raise ValueError("theta and phi must have matching shapes")
    if np.any(theta < -1e-14) or np.any(theta > np.pi + 1e-14):
        raise ValueError("theta must lie in [0, pi]")
    ls, ms = index_arrays(count)
    lmax = int(ls[-1]) if count else 0
    # at least degree 1 so the ladder below can always index P[l, 1]
    P, Q = kernels.legendre_table(max(lmax, 1), np.ascontiguousarray(np.cos(theta)), np.ascontiguousarray(np.sin(theta)))
    absm = np.abs(ms)
    sign = np.where((ms < 0) & (absm % 2 == 1), -1.0, 1.0)
    phase = np.exp(1j * ms[:, None] * phi[None, :])
    Pl = P[ls, absm]
    Y = sign[:, None] * Pl * phase
    dphi_over_sin = sign[:, None] * (1j * ms[:, None]) * Q[ls, absm] * phase

    # d/dtheta of the normalized P_l^|m| via the raising/lowering ladder
    up = np.where(absm + 1 <= ls, absm + 1, absm)
    up_valid = (absm + 1 <= ls)[:, None]
    cu = 0.5 * np.sqrt(np.maximum((ls - absm) * (ls + absm + 1), 0))
    cd = 0.5 * np.sqrt(np.maximum((ls + absm) * (ls - absm + 1), 0))
    p_up = np.where(up_valid, P[ls, up], 0.0)
    down = np.abs(absm - 1)
    # P_l^{-1} = -P_l^{1}
    p_down = np.where((absm == 0)[:, None], -P[ls, np.minimum(1, ls)] * (ls >= 1)[:, None], P[ls, down])
    dP = cu[:, None] * p_up - cd[:, None] * p_down
    dtheta = sign[:, None] * dP * phase
    return HarmonicTable(Y=Y, dtheta=dtheta, dphi_over_sin=dphi_over_sin, ls=ls, ms=ms)


def sph_harm(idx: AngularIndex | tuple[int, int], theta, phi):
    """Single spherical harmonic ``Y_lm(theta, phi)``."""
    l, m = idx
    idx = AngularIndex(l, m)
    theta = np.asarray(theta, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), theta.shape)
    tab = harmonic_table(idx.rank + 1, theta, phi)
    out = tab.Y[idx.rank].reshape(theta.shape)
    return out[()] if out.ndim == 0 else out
