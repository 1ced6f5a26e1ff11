"""Gram matrices of boundary-restricted outgoing waves.

The raw waves are ``Psi_n(r) = Y_n(theta, phi) h_{l_n}(k |r|)`` and the Gram
matrix is ``g_ij = int int Psi_i conj(Psi_j) dtheta dphi`` over the boundary
parametrization. Because ``h_i conj(h_j)`` cancels the oscillatory factor
``exp(i k |r|)``, every entry is a polynomial in ``1/k``::

    g_ij = (-1)**m_j * sum_{m=0}^{l_i + l_j} p_ij^m / k**(m + 2)
    p_ij^m = (sum_l hc[l_i, l] conj(hc[l_j, m - l])) * int int Y_i Y_{l_j,-m_j} / |r|**(m + 2)

Four assembly routes are provided and must agree on their common domain:
direct quadrature, reassembly from cached frequency moments, the multinomial
expansion for harmonic surfaces, and per-segment sums for polyline bodies of
revolution (zonal ``m = 0`` block only).
"""

from __future__ import annotations

import json
import logging
import math
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .indexing import count_upto, enumerate_multi_indices, index_arrays, multinomial, stars_and_bars
from .quadrature import QuadratureRule, default_rule, gauss_rule, product_harmonic_matrix
from .special import HarmonicTable, hankel_coeff_table, hankel_table, harmonic_table, legendre_P
from .surface import HarmonicStarSurface, RevolutionPolyline, Surface, SurfaceSample

logger = logging.getLogger(__name__)

__all__ = [
    "BoundaryNodes",
    "FrequencyMoments",
    "GramAssemblyError",
    "GramCapExceeded",
    "GramData",
    "assemble_from_moments",
    "compute_moments",
    "gram_harmonic",
    "gram_polyline",
    "gram_quadrature",
    "hankel_convolution",
    "zonal_block",
]

DEFAULT_MULTI_INDEX_CAP = 2_000_000
HERMITIAN_RTOL = 1e-12


class GramAssemblyError(RuntimeError):
    pass


class GramCapExceeded(GramAssemblyError):
    """The multinomial expansion would exceed the configured number of terms."""


def _resolve_count(L) -> int:
    if isinstance(L, (int, np.integer)):
        return count_upto((int(L), int(L)))
    return count_upto(tuple(L))


@dataclass
class BoundaryNodes:
    """Surface data on the quadrature nodes, evaluated once and reused for every ``k``."""

    rule: QuadratureRule
    sample: SurfaceSample
    weights: np.ndarray
    harmonics: HarmonicTable
    lmax: int

    @classmethod
    def build(cls, surface: Surface, L, rule: QuadratureRule | None = None) -> "BoundaryNodes":
        count = _resolve_count(L)
        ls, _ = index_arrays(count)
        lmax = int(ls[-1])
        rule = rule or default_rule(lmax, surface)
        th, ph, w = rule.flat
        sample = surface.sample(th, ph)
        return cls(rule, sample, w, harmonic_table(count, th, ph), lmax)

    @property
    def count(self) -> int:
        return self.harmonics.count

    @property
    def ls(self) -> np.ndarray:
        return self.harmonics.ls

    @property
    def ms(self) -> np.ndarray:
        return self.harmonics.ms

    def waves(self, k: float) -> np.ndarray:
        """Raw outgoing waves ``Psi_n`` on the nodes, shape ``(count, npts)``."""
        h, _ = hankel_table(self.lmax, k * self.sample.radius)
        return self.harmonics.Y * h[self.ls]

    def truncated(self, count: int) -> "BoundaryNodes":
        if count > self.count:
            raise ValueError("cannot grow a node set without re-sampling the surface")
        tab = self.harmonics
        sub = HarmonicTable(tab.Y[:count], tab.dtheta[:count], tab.dphi_over_sin[:count], tab.ls[:count], tab.ms[:count])
        return BoundaryNodes(self.rule, self.sample, self.weights, sub, int(tab.ls[count - 1]))


@dataclass
class GramData:
    """Dense Hermitian Gram matrix at one wavenumber."""

    matrix: np.ndarray
    k: float
    ls: np.ndarray
    ms: np.ndarray
    path: str
    info: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return self.matrix.shape[0]

    def hermitian_error(self) -> float:
        G = self.matrix
        return float(np.linalg.norm(G - G.conj().T) / max(np.linalg.norm(G), 1e-300))

    def check(self, rtol: float = HERMITIAN_RTOL) -> "GramData":
        err = self.hermitian_error()
        if not err <= rtol:
            raise GramAssemblyError(f"{self.path} Gram matrix not Hermitian (relative error {err:.3g})")
        return self


def _conj_sign(ms) -> np.ndarray:
    return np.where(np.asarray(ms) % 2 == 0, 1.0, -1.0)


def hankel_convolution(lmax: int) -> np.ndarray:
    """``H[a, b, m] = sum_l hc[a, l] conj(hc[b, m - l])`` for degrees ``a, b <= lmax``."""
    hc = hankel_coeff_table(lmax)
    out = np.zeros((lmax + 1, lmax + 1, 2 * lmax + 1), dtype=np.complex128)
    for a in range(lmax + 1):
        for b in range(lmax + 1):
            out[a, b, : a + b + 1] = np.convolve(hc[a, : a + 1], np.conj(hc[b, : b + 1]))
    return out


def gram_quadrature(
    surface: Surface | None,
    k: float,
    L=None,
    rule: QuadratureRule | None = None,
    nodes: BoundaryNodes | None = None,
) -> GramData:
    """Gram matrix by direct quadrature of ``Psi_i conj(Psi_j)``."""
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    nodes = nodes or BoundaryNodes.build(surface, L, rule)
    psi = nodes.waves(k)
    G = (psi * nodes.weights) @ psi.conj().T
    return GramData(G, float(k), nodes.ls, nodes.ms, "quadrature").check()


@dataclass
class FrequencyMoments:
    """k-independent moments ``p[i, j, m]`` (zero for ``m > l_i + l_j``).

    Binary layout written by :meth:`save`::

        8 bytes   magic b"WHMOMNT1"
        uint32    format version (little endian)
        uint32    header length H
        H bytes   UTF-8 JSON header: geometry_hash, count, lmax, rule,
                  dtype ("complex128" or "complex64"), shape [count, count, 2*lmax+1]
        rest      row-major little-endian complex array of that shape
    """

    p: np.ndarray
    ls: np.ndarray
    ms: np.ndarray
    geometry_hash: str = ""
    rule: dict = field(default_factory=dict)

    MAGIC = b"WHMOMNT1"
    VERSION = 1

    @property
    def count(self) -> int:
        return self.p.shape[0]

    @property
    def lmax(self) -> int:
        return int(self.ls[-1])

    def n_terms(self, i: int, j: int) -> int:
        return int(self.ls[i] + self.ls[j] + 1)

    def save(self, path, dtype: str = "complex128") -> Path:
        if dtype not in ("complex128", "complex64"):
            raise ValueError("dtype must be complex128 or complex64")
        header = {
            "geometry_hash": self.geometry_hash,
            "count": self.count,
            "lmax": self.lmax,
            "rule": self.rule,
            "dtype": dtype,
            "shape": list(self.p.shape),
        }
        blob = json.dumps(header, sort_keys=True).encode()
        path = Path(path)
        with open(path, "wb") as fh:
            fh.write(self.MAGIC)
            fh.write(struct.pack("<II", self.VERSION, len(blob)))
            fh.write(blob)
            fh.write(np.ascontiguousarray(self.p, dtype=np.dtype(dtype).newbyteorder("<")).tobytes())
        return path

    @classmethod
    def load(cls, path) -> "FrequencyMoments":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != cls.MAGIC:
                raise ValueError(f"{path}: not a frequency-moment cache file")
            version, hlen = struct.unpack("<II", fh.read(8))
            if version != cls.VERSION:
                raise ValueError(f"{path}: unsupported cache version {version}")
            header = json.loads(fh.read(hlen).decode())
            dt = np.dtype(header["dtype"]).newbyteorder("<")
            data = np.frombuffer(fh.read(), dtype=dt)
        shape = tuple(header["shape"])
        p = data.reshape(shape).astype(np.complex128)
        ls, ms = index_arrays(header["count"])
        return cls(p, ls, ms, header["geometry_hash"], header["rule"])

    def matches(self, surface: Surface, count: int, rule: QuadratureRule) -> bool:
        return (
            self.geometry_hash == surface.geometry_hash()
            and self.count == count
            and self.rule == rule.to_dict()
        )


def compute_moments(
    surface: Surface | None,
    L=None,
    rule: QuadratureRule | None = None,
    nodes: BoundaryNodes | None = None,
) -> FrequencyMoments:
    """Geometric moments ``int int Y_i Y_{l_j,-m_j} / |r|**(m+2)`` times the Hankel convolution."""
    nodes = nodes or BoundaryNodes.build(surface, L, rule)
    Yi = nodes.harmonics.Y
    Ycj = nodes.harmonics.conjugate_rows()
    inv_r = 1.0 / nodes.sample.radius
    M = 2 * nodes.lmax + 1
    H = hankel_convolution(nodes.lmax)
    ls = nodes.ls
    p = np.empty((nodes.count, nodes.count, M), dtype=np.complex128)
    wr = nodes.weights * inv_r**2
    for m in range(M):
        geo = (Yi * wr) @ Ycj.T
        p[:, :, m] = H[ls[:, None], ls[None, :], m] * geo
        wr = wr * inv_r
    ghash = surface.geometry_hash() if surface is not None else ""
    return FrequencyMoments(p, nodes.ls, nodes.ms, ghash, nodes.rule.to_dict())


def assemble_from_moments(moments: FrequencyMoments, k: float) -> GramData:
    """Evaluate the inverse-frequency polynomial at ``k``; no surface evaluations."""
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    sign = _conj_sign(moments.ms)
    G = kernels.assemble_moments(np.ascontiguousarray(moments.p), sign, float(k))
    return GramData(G, float(k), moments.ls, moments.ms, "moments")


_harmonic_cache_lock = threading.Lock()
_harmonic_cache: dict[tuple, tuple[np.ndarray, dict]] = {}


def _harmonic_geometric_moments(surface: HarmonicStarSurface, count: int, rule: QuadratureRule, cap: int):
    key = (surface.geometry_hash(), count, rule.key)
    with _harmonic_cache_lock:
        hit = _harmonic_cache.get(key)
    if hit is not None:
        return hit
    ls, _ = index_arrays(count)
    lmax = int(ls[-1])
    M = 2 * lmax + 1
    slots = surface.nonzero_ranks()
    n_terms = sum(stars_and_bars(m + 2, len(slots)) for m in range(M))
    if n_terms > cap:
        raise GramCapExceeded(
            f"multinomial expansion needs {n_terms} multi-indices (cap {cap}); use gram_quadrature instead"
        )
    geo = np.zeros((count, count, M), dtype=np.complex128)
    full_slots = count_upto((surface.N, surface.N))
    for m in range(M):
        for d in enumerate_multi_indices(m + 2, (surface.N, surface.N), slots=slots):
            coef = float(multinomial(d))
            for r, v in d.items:
                coef = coef * surface.a[r] ** v
            geo[:, :, m] += coef * product_harmonic_matrix(d, count, rule)
    info = {
        "multi_indices": n_terms,
        "multi_indices_full_support": sum(stars_and_bars(m + 2, full_slots) for m in range(M)),
        "slots": slots,
    }
    with _harmonic_cache_lock:
        _harmonic_cache[key] = (geo, info)
    return geo, info


def gram_harmonic(
    surface: HarmonicStarSurface,
    k: float,
    L,
    rule: QuadratureRule | None = None,
    cap: int = DEFAULT_MULTI_INDEX_CAP,
) -> GramData:
    """Gram matrix from the multinomial expansion of ``(sum_l a_l Y_l)**(m + 2)``.

    Each power is expanded as ``sum_{|d| = m+2} C^d a^d prod Y^d`` and slotted
    into product-harmonic integrals ``I^{d + e_i + e_conj(j)}``. Multi-indices
    run over slots with non-zero coefficients only (the others contribute
    ``a^d = 0``). Geometric moments are cached per surface, truncation and rule.
    """
    if not isinstance(surface, HarmonicStarSurface):
        raise TypeError("gram_harmonic needs a HarmonicStarSurface")
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    count = _resolve_count(L)
    ls, ms = index_arrays(count)
    lmax = int(ls[-1])
    rule = rule or default_rule(lmax, surface)
    geo, info = _harmonic_geometric_moments(surface, count, rule, cap)
    H = hankel_convolution(lmax)
    p = H[ls[:, None], ls[None, :], :] * geo
    G = kernels.assemble_moments(np.ascontiguousarray(p), _conj_sign(ms), float(k))
    return GramData(G, float(k), ls, ms, "harmonic", dict(info)).check()


def zonal_block(gram: GramData, l_degree: int) -> GramData:
    """Restrict a Gram matrix to the ``m = 0`` harmonics of degree ``<= l_degree``."""
    ranks = np.array([l * l for l in range(l_degree + 1)])
    if ranks[-1] >= gram.count:
        raise ValueError("Gram matrix does not reach the requested degree")
    sub = gram.matrix[np.ix_(ranks, ranks)]
    return GramData(sub, gram.k, gram.ls[ranks], gram.ms[ranks], gram.path + ":zonal", dict(gram.info))


def gram_polyline(
    surface: RevolutionPolyline,
    k: float,
    l_degree: int,
    weight: str = "one",
    n_per_panel: int | None = None,
) -> GramData:
    """Zonal (``m = 0``) Gram block of a polyline body of revolution by per-segment sums.

    On segment ``p`` the inverse radius is ``(a_p cos + b_p sin) / f_p``, so

        g_ij = 2 pi sum_p sum_m k**-(m+2) H[i, j, m] / f_p**(m+2)
               * sum_l binom(m+2, l) a_p**l b_p**(m+2-l) T^p_{ij,lm}

    with ``T^p_{ij,lm} = int_p Y_i Y_j cos**l sin**(m+2-l) w(theta) dtheta``.
    ``weight="one"`` matches the ``dtheta dphi`` measure of the other paths;
    ``weight="sin"`` inserts an extra ``sin(theta)``.
    """
    if not isinstance(surface, RevolutionPolyline):
        raise TypeError("gram_polyline needs a RevolutionPolyline")
    if weight not in ("one", "sin"):
        raise ValueError("weight must be 'one' or 'sin'")
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    if np.any(surface.f_coef == 0):
        raise GramAssemblyError("polyline segment with f = 0")
    n = n_per_panel or default_rule(l_degree, surface).n_per_panel
    x, w = np.polynomial.legendre.leggauss(n)
    H = hankel_convolution(l_degree)
    nl = l_degree + 1
    M = 2 * l_degree + 1
    kpow = float(k) ** -(np.arange(M) + 2.0)
    G = np.zeros((nl, nl), dtype=np.complex128)
    for p in range(surface.n_segments):
        lo, hi = surface.theta_breaks[p], surface.theta_breaks[p + 1]
        if hi <= lo:
            continue
        half = 0.5 * (hi - lo)
        th = lo + half * (x + 1.0)
        wt = half * w * (np.sin(th) if weight == "sin" else 1.0)
        c, s = np.cos(th), np.sin(th)
        Y = np.array([np.sqrt((2 * l + 1) / (4 * np.pi)) * legendre_P(l, c) for l in range(nl)])
        a, b, f = surface.a_coef[p], surface.b_coef[p], surface.f_coef[p]
        for m in range(M):
            q = m + 2
            acc = np.zeros((nl, nl))
            for l in range(q + 1):
                T = (Y * (wt * c**l * s ** (q - l))) @ Y.T
                acc += math.comb(q, l) * a**l * b ** (q - l) * T
            G += kpow[m] * H[:nl, :nl, m] * acc / f**q
    G *= 2.0 * np.pi
    ls = np.arange(nl)
    return GramData(G, float(k), ls, np.zeros(nl, dtype=int), "polyline", {"weight": weight}).check()
