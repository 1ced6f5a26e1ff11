"""Boundary data, solution expansion and everything derived from it.

The radiating solution with boundary values ``u0`` is

    u(r) = sum_n uhat_n hat Psi_n(r) = sum_k b_k Psi_k(r),   b = C^T uhat,

with ``uhat = conj(C) u`` and raw moments ``u_p = int int u0 conj(Psi_p)``.
Since ``Psi_k(r) ~ Y_k exp(i k |r|) / (k |r|)``, the scattering amplitude is
``f = sum_m A_m Y_m`` with ``A = b / k``.

Physical sign convention: the solution *equals* ``u0`` on the boundary. For
a sound-soft obstacle the scattered field is the negative incident trace;
the two choices differ by the sign of ``A`` and leave cross sections alone.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .indexing import rank
from .gram import BoundaryNodes, FrequencyMoments, GramData, assemble_from_moments, gram_quadrature
from .orthonorm import BasisTransform, orthonormalize, raw_waves
from .quadrature import QuadratureRule
from .special import hankel_table, harmonic_table
from .surface import RevolutionPolyline, Surface, _frame

logger = logging.getLogger(__name__)

__all__ = [
    "BoundaryData",
    "CallableData",
    "CrossSection",
    "DomainError",
    "FarField",
    "GridData",
    "ModeTrace",
    "PlaneWave",
    "Solution",
    "SolutionExpansion",
    "TransportCrossSection",
    "UnsupportedCaseError",
    "boundary_moments",
    "boundary_residual",
    "direct_sigma_T",
    "dtn_apply",
    "expand",
    "far_field",
    "green_kernel",
    "near_field",
    "solve",
    "total_cross_section",
    "transport_cross_section",
    "wave_normal_derivatives",
]


class DomainError(ValueError):
    """Evaluation point inside the obstacle (or at the origin)."""

    def __init__(self, message: str, bad: np.ndarray | None = None):
        super().__init__(message)
        self.bad = bad


class UnsupportedCaseError(ValueError):
    pass


# -- boundary data ---------------------------------------------------------


class BoundaryData:
    """Dirichlet data on the boundary. Subclasses implement :meth:`values`."""

    def values(self, theta, phi, points, k: float) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"type": type(self).__name__}


@dataclass
class PlaneWave(BoundaryData):
    """``u0 = exp(i k <r, d>)`` for a unit direction ``d`` (normalized on construction)."""

    direction: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if d.shape != (3,) or not n > 0:
            raise ValueError("plane-wave direction must be a non-zero 3-vector")
        self.direction = tuple(float(x) for x in d / n)

    def values(self, theta, phi, points, k):
        return np.exp(1j * k * (np.asarray(points) @ np.asarray(self.direction)))

    def to_dict(self):
        return {"plane_wave": {"direction": list(self.direction)}}


@dataclass
class ModeTrace(BoundaryData):
    """Trace of the raw wave ``Psi_q = Y_lm h_l(k|r|)``."""

    l: int
    m: int

    def values(self, theta, phi, points, k):
        tab = harmonic_table((self.l + 1) ** 2, theta, phi)
        rho = np.linalg.norm(points, axis=-1)
        h, _ = hankel_table(self.l, k * rho)
        return tab.Y[rank(self.l, self.m)] * h[self.l]

    def to_dict(self):
        return {"mode_trace": {"l": self.l, "m": self.m}}


@dataclass
class CallableData(BoundaryData):
    """Caller-supplied ``fn(theta, phi, points, k) -> complex array``."""

    fn: Callable
    label: str = "callable"

    def values(self, theta, phi, points, k):
        return np.asarray(self.fn(theta, phi, points, k), dtype=np.complex128)

    def to_dict(self):
        return {"callable": self.label}


@dataclass
class GridData(BoundaryData):
    """Samples on a tensor grid in ``(theta, phi)``, interpolated (periodic in phi).

    ``values`` has shape ``(len(theta), len(phi))``; theta must span the nodes
    used for quadrature (the grid is extended to the poles by nearest values).
    """

    theta: np.ndarray
    phi: np.ndarray
    samples: np.ndarray
    source: str = ""
    method: str = "cubic"

    def __post_init__(self):
        from scipy.interpolate import RegularGridInterpolator

        th = np.asarray(self.theta, float)
        ph = np.asarray(self.phi, float)
        v = np.asarray(self.samples, dtype=np.complex128)
        if v.shape != (th.size, ph.size):
            raise ValueError(f"grid values must have shape ({th.size}, {ph.size}), got {v.shape}")
        order = np.argsort(ph)
        ph, v = ph[order], v[:, order]
        # wrap phi so interpolation is periodic
        ph_ext = np.concatenate([ph[-2:] - 2 * np.pi, ph, ph[:2] + 2 * np.pi])
        v_ext = np.concatenate([v[:, -2:], v, v[:, :2]], axis=1)
        method = self.method if min(th.size, ph_ext.size) >= 4 else "linear"
        self._interp = RegularGridInterpolator((th, ph_ext), v_ext, method=method, bounds_error=False, fill_value=None)

    @classmethod
    def from_csv(cls, path) -> "GridData":
        """Rows ``theta, phi, re, im`` covering a full tensor grid."""
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        if data.shape[1] != 4:
            raise ValueError(f"{path}: expected 4 columns theta, phi, re, im")
        th = np.unique(data[:, 0])
        ph = np.unique(data[:, 1])
        if th.size * ph.size != data.shape[0]:
            raise ValueError(f"{path}: rows do not form a tensor grid")
        it = np.searchsorted(th, data[:, 0])
        ip = np.searchsorted(ph, data[:, 1])
        v = np.empty((th.size, ph.size), dtype=np.complex128)
        v[it, ip] = data[:, 2] + 1j * data[:, 3]
        return cls(th, ph, v, source=str(path))

    def values(self, theta, phi, points, k):
        pts = np.stack([np.ravel(theta), np.mod(np.ravel(phi), 2 * np.pi)], axis=-1)
        return self._interp(pts).reshape(np.shape(theta))

    def to_dict(self):
        return {"grid_file": self.source}


# -- expansion --------------------------------------------------------------


def _nodes(surface, k, L, rule, nodes):
    return nodes if nodes is not None else BoundaryNodes.build(surface, L, rule)


def boundary_values(data: BoundaryData, nodes: BoundaryNodes, k: float) -> np.ndarray:
    s = nodes.sample
    return np.asarray(data.values(s.theta, s.phi, s.points, k), dtype=np.complex128)


def boundary_moments(
    data: BoundaryData,
    surface: Surface | None,
    k: float,
    L=None,
    rule: QuadratureRule | None = None,
    nodes: BoundaryNodes | None = None,
) -> np.ndarray:
    """``u_p = int int u0 conj(Y_p) conj(h_p(k r)) dtheta dphi`` for all ranks."""
    nodes = _nodes(surface, k, L, rule, nodes)
    u0 = boundary_values(data, nodes, k)
    return nodes.waves(k).conj() @ (nodes.weights * u0)


@dataclass(frozen=True)
class SolutionExpansion:
    k: float
    u: np.ndarray
    uhat: np.ndarray
    ls: np.ndarray
    ms: np.ndarray

    def degree_norms(self) -> np.ndarray:
        """``sqrt(sum |uhat_n|^2)`` over each degree ``l``; should decay for smooth data."""
        lmax = int(self.ls[-1])
        return np.array([np.linalg.norm(self.uhat[self.ls == l]) for l in range(lmax + 1)])

    def boundary_norm(self) -> float:
        """``sum |uhat_n|^2``, the squared L2 norm of the boundary projection."""
        return float(np.sum(np.abs(self.uhat) ** 2))


def expand(u: np.ndarray, transform: BasisTransform) -> SolutionExpansion:
    """Orthonormal coefficients ``uhat = conj(C) u``."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (transform.count,):
        raise ValueError(f"moment vector has shape {u.shape}, expected ({transform.count},)")
    return SolutionExpansion(transform.k, u, transform.C.conj() @ u, transform.ls, transform.ms)


def wave_coefficients(expansion: SolutionExpansion, transform: BasisTransform) -> np.ndarray:
    """Coefficients ``b`` with ``u = sum_k b_k Psi_k``."""
    return transform.C.T @ expansion.uhat


# -- far field ----------------------------------------------------------------


@dataclass
class CrossSection:
    coefficient_sum: float
    double_sum: float

    @property
    def value(self) -> float:
        return self.coefficient_sum

    @property
    def discrepancy(self) -> float:
        return abs(self.coefficient_sum - self.double_sum) / max(abs(self.coefficient_sum), 1e-300)

    def to_dict(self) -> dict:
        return {"coefficient_sum": self.coefficient_sum, "double_sum": self.double_sum, "relative_discrepancy": self.discrepancy}


@dataclass
class TransportCrossSection:
    """Transport cross section for incidence along ``+z``.

    ``coupling_sum`` pairs ``alpha_{l+1,m}`` with ``A_lm conj(A_{l+1,m})``,
    which is what ``cos(theta) Y_lm = alpha_{l+1,m} Y_{l+1,m} + alpha_{lm} Y_{l-1,m}``
    produces; ``composed = sigma_T - 2 * coupling_sum``. ``literal_sum`` keeps the
    other coefficient pairing, ``alpha_{lm}``, for comparison. ``quadrature`` is
    the direct angular integral of ``(1 - cos(theta)) |f|^2``.
    """

    composed: float
    coupling_sum: float
    literal_sum: float
    quadrature: float
    sigma_T: float

    @property
    def value(self) -> float:
        return self.composed

    def to_dict(self) -> dict:
        return {
            "composed": self.composed,
            "coupling_sum": self.coupling_sum,
            "literal_sum": self.literal_sum,
            "literal_composed": self.sigma_T - 2.0 * self.literal_sum,
            "quadrature": self.quadrature,
            "relative_discrepancy": abs(self.composed - self.quadrature) / max(abs(self.quadrature), 1e-300),
        }


@dataclass
class FarField:
    """Far-field coefficients ``A_m`` plus every partial ``A^L`` (row ``L`` of ``history``)."""

    A: np.ndarray
    k: float
    ls: np.ndarray
    ms: np.ndarray
    history: np.ndarray = field(repr=False)

    def amplitude(self, theta, phi) -> np.ndarray:
        """Scattering amplitude ``f(theta, phi) = sum_m A_m Y_m``."""
        theta = np.asarray(theta, float)
        phi = np.broadcast_to(np.asarray(phi, float), theta.shape)
        tab = harmonic_table(self.A.size, theta.ravel(), phi.ravel())
        return (self.A @ tab.Y).reshape(theta.shape)

    def sigma_history(self) -> np.ndarray:
        """``sigma_T^L = sum_n |A_n^L|^2`` for each truncation rank ``L``."""
        return np.sum(np.abs(self.history) ** 2, axis=1)

    def coefficient(self, l: int, m: int) -> complex:
        return complex(self.A[rank(l, m)])


def far_field(expansion: SolutionExpansion, transform: BasisTransform) -> FarField:
    """``A_m = (1/k) sum_{n >= m} c_nm uhat_n`` built incrementally in ``n``.

    Row ``L`` of the history holds ``A^L``, i.e. the sum truncated at rank
    ``L``; each row adds ``c_Lm uhat_L / k`` to the previous one.
    """
    k = transform.k
    hist = np.cumsum(transform.C * expansion.uhat[:, None], axis=0) / k
    return FarField(hist[-1].copy(), k, transform.ls, transform.ms, hist)


def total_cross_section(farfield: FarField) -> float:
    return float(np.sum(np.abs(farfield.A) ** 2))


def direct_sigma_T(expansion: SolutionExpansion, transform: BasisTransform) -> float:
    """Expanded double sum over ``m <= l < n`` (cross-check of ``sum |A_m|^2``)."""
    return float(
        kernels.sigma_double_sum(
            np.ascontiguousarray(transform.C), np.ascontiguousarray(expansion.uhat), float(transform.k)
        )
    )


def cross_sections(expansion: SolutionExpansion, transform: BasisTransform, farfield: FarField | None = None) -> CrossSection:
    ff = farfield or far_field(expansion, transform)
    return CrossSection(total_cross_section(ff), direct_sigma_T(expansion, transform))


def _alpha(l, m):
    l = np.asarray(l, float)
    m = np.asarray(m, float)
    with np.errstate(invalid="ignore"):
        v = (l - m) * (l + m) / ((2 * l + 1) * (2 * l - 1))
    return np.sqrt(np.where(v > 0, v, 0.0))


def _angular_quadrature(lmax: int):
    x, w = np.polynomial.legendre.leggauss(lmax + 4)
    n_phi = 2 * lmax + 4
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi))
    return TH.ravel(), PH.ravel(), W.ravel()


def sigma_quadrature(farfield: FarField) -> float:
    """``int |f|^2 dOmega`` over the unit sphere by product Gauss quadrature."""
    th, ph, w = _angular_quadrature(int(farfield.ls[-1]))
    f = farfield.amplitude(th, ph)
    return float(w @ np.abs(f) ** 2)


def transport_quadrature(farfield: FarField, direction=(0.0, 0.0, 1.0)) -> float:
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    th, ph, w = _angular_quadrature(int(farfield.ls[-1]) + 1)
    q = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    f = farfield.amplitude(th, ph)
    return float(w @ ((1.0 - q @ d) * np.abs(f) ** 2))


def transport_cross_section(farfield: FarField, direction=(0.0, 0.0, 1.0)) -> TransportCrossSection:
    """Coefficient forms of the transport cross section (axial incidence only)."""
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    if np.linalg.norm(d - np.array([0.0, 0.0, 1.0])) > 1e-12:
        raise UnsupportedCaseError("closed-form transport cross section is available for +z incidence only")
    A, ls, ms = farfield.A, farfield.ls, farfield.ms
    n = A.size
    coupling = 0.0
    literal = 0.0
    for i in range(n):
        l, m = int(ls[i]), int(ms[i])
        if rank(l + 1, m) >= n:
            continue
        j = rank(l + 1, m)
        re = float(np.real(A[i] * np.conj(A[j])))
        coupling += float(_alpha(l + 1, m)) * re
        literal += float(_alpha(l, m)) * re
    sig = total_cross_section(farfield)
    quad = transport_quadrature(farfield, d)
    return TransportCrossSection(sig - 2.0 * coupling, coupling, literal, quad, sig)


# -- field evaluation -------------------------------------------------------


def _check_exterior(surface: Surface | None, points: np.ndarray, rtol: float = 1e-12) -> None:
    rho = np.linalg.norm(points, axis=-1)
    bad = ~(rho > 0)
    if surface is not None:
        bad |= ~surface.is_exterior(points, rtol=rtol)
    if np.any(bad):
        q = int(np.argmax(bad))
        raise DomainError(f"{int(bad.sum())} point(s) inside the obstacle, first at {points[q].tolist()}", bad)


def near_field(
    expansion: SolutionExpansion,
    transform: BasisTransform,
    surface: Surface | None,
    points,
    check: bool = True,
) -> np.ndarray:
    """Truncated series ``sum_n uhat_n hat Psi_n(r)`` at exterior points ``(..., 3)``."""
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 3)
    if check:
        _check_exterior(surface, flat)
    b = wave_coefficients(expansion, transform)
    vals = b @ raw_waves(transform.count, transform.k, flat)
    return vals.reshape(pts.shape[:-1])


def boundary_residual(
    expansion: SolutionExpansion,
    transform: BasisTransform,
    data: BoundaryData,
    nodes: BoundaryNodes,
) -> float:
    """``L2(dtheta dphi)`` norm of ``u - u0`` on the boundary nodes."""
    k = transform.k
    b = wave_coefficients(expansion, transform)
    sub = nodes.truncated(transform.count) if nodes.count != transform.count else nodes
    u = b @ sub.waves(k)
    u0 = boundary_values(data, nodes, k)
    return float(np.sqrt(nodes.weights @ np.abs(u - u0) ** 2))


def green_kernel(transform: BasisTransform, r_points, t_points, surface: Surface | None = None) -> np.ndarray:
    """``K[a, b] = sum_n hat Psi_n(r_a) conj(hat Psi_n(t_b))``.

    Built from the same orthonormal-wave vectors on both sides and summed
    over ``n`` in a fixed order (no BLAS blocking), so swapping the arguments
    yields the conjugate transpose bit for bit.
    """
    r = np.asarray(r_points, float).reshape(-1, 3)
    t = np.asarray(t_points, float).reshape(-1, 3)
    if surface is not None:
        _check_exterior(surface, r)
        _check_exterior(surface, t)
    Pr = transform.C @ raw_waves(transform.count, transform.k, r)
    Pt = transform.C @ raw_waves(transform.count, transform.k, t)
    return np.einsum("na,nb->ab", Pr, Pt.conj(), optimize=False)


def wave_normal_derivatives(count: int, k: float, surface: Surface, theta, phi) -> np.ndarray:
    """``d Psi_n / d nu`` on the boundary points ``(theta, phi)``; shape ``(count, npts)``.

    Chain rule in spherical coordinates,
    ``grad Psi = k h' Y r_hat + (h / r) (dY/dtheta theta_hat + (dY/dphi) / sin(theta) phi_hat)``,
    dotted with the outward unit normal.
    """
    theta = np.ravel(np.asarray(theta, float))
    phi = np.ravel(np.asarray(phi, float))
    if isinstance(surface, RevolutionPolyline):
        kinks = np.asarray(surface.theta_breaks[1:-1])
        if kinks.size and np.any(np.abs(theta[:, None] - kinks[None, :]) < 1e-12):
            warnings.warn("normal at a polyline kink is one-sided (left segment)", RuntimeWarning, stacklevel=2)
    s = surface.sample(theta, phi)
    rhat, that, phat = _frame(theta, phi)
    nr = np.sum(s.normal * rhat, axis=-1)
    nt = np.sum(s.normal * that, axis=-1)
    npn = np.sum(s.normal * phat, axis=-1)
    tab = harmonic_table(count, theta, phi)
    h, dh = hankel_table(int(tab.ls[-1]), k * s.radius)
    h, dh = h[tab.ls], dh[tab.ls]
    return k * dh * tab.Y * nr + (h / s.radius) * (tab.dtheta * nt + tab.dphi_over_sin * npn)


def dtn_apply(
    expansion: SolutionExpansion,
    transform: BasisTransform,
    surface: Surface,
    theta,
    phi,
) -> np.ndarray:
    """Truncated Dirichlet-to-Neumann map ``sum_n uhat_n d hat Psi_n / d nu`` at boundary points."""
    shape = np.shape(theta)
    b = wave_coefficients(expansion, transform)
    dn = wave_normal_derivatives(transform.count, transform.k, surface, theta, phi)
    return (b @ dn).reshape(shape)


# -- pipeline ---------------------------------------------------------------


@dataclass
class Solution:
    """Everything computed for one wavenumber."""

    gram: GramData
    transform: BasisTransform
    expansion: SolutionExpansion
    farfield: FarField
    nodes: BoundaryNodes | None = None

    @property
    def k(self) -> float:
        return self.transform.k

    def cross_sections(self) -> CrossSection:
        return cross_sections(self.expansion, self.transform, self.farfield)


def solve(
    surface: Surface,
    k: float,
    L,
    data: BoundaryData,
    rule: QuadratureRule | None = None,
    nodes: BoundaryNodes | None = None,
    moments: FrequencyMoments | None = None,
) -> Solution:
    """Gram matrix, orthonormalization, expansion and far field at one ``k``.

    With ``moments`` the Gram matrix is reassembled from the cached
    frequency moments; ``nodes`` (cached surface samples) are reused for the
    boundary moments, so no surface evaluation happens here.
    """
    nodes = _nodes(surface, k, L, rule, nodes)
    if moments is not None:
        G = assemble_from_moments(moments, k)
    else:
        G = gram_quadrature(None, k, nodes=nodes)
    T = orthonormalize(G)
    u = boundary_moments(data, None, k, nodes=nodes)
    ex = expand(u, T)
    return Solution(G, T, ex, far_field(ex, T), nodes)
