"""Tensor-product quadrature on ``[0, pi] x [0, 2 pi)`` under ``dtheta dphi``.

Theta uses Gauss-Legendre nodes, composite over panels when the surface has
kinks; phi uses the uniform trapezoidal rule, exact for ``exp(i M phi)``
whenever ``0 < |M| < n_phi``. There is deliberately no ``sin(theta)``
weight: the boundary inner product lives on the parameter rectangle.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .indexing import MultiIndex, index_arrays, unrank
from .special import harmonic_table

__all__ = [
    "QuadratureError",
    "QuadratureRule",
    "default_rule",
    "gauss_rule",
    "integrate",
    "product_harmonic_integral",
    "product_harmonic_matrix",
]

# accuracy target used to certify the resolved trigonometric degree in theta
_CERT_TOL = 1e-13


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    theta: np.ndarray
    theta_weights: np.ndarray
    phi: np.ndarray
    phi_weights: np.ndarray
    panels: tuple[float, ...] = (0.0, np.pi)
    n_per_panel: int = 0

    @property
    def n_theta(self) -> int:
        return self.theta.size

    @property
    def n_phi(self) -> int:
        return self.phi.size

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    @property
    def key(self) -> tuple:
        return (self.n_per_panel, self.n_phi, tuple(round(p, 15) for p in self.panels))

    def to_dict(self) -> dict:
        return {"n_theta": self.n_per_panel, "n_phi": self.n_phi, "panels": list(self.panels)}

    @cached_property
    def flat(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened ``(theta, phi, weight)`` arrays, theta-major."""
        TH, PH = np.meshgrid(self.theta, self.phi, indexing="ij")
        W = np.outer(self.theta_weights, self.phi_weights)
        return TH.ravel(), PH.ravel(), W.ravel()

    @cached_property
    def theta_degree(self) -> int:
        """Largest ``J`` with ``cos(j theta)``, ``sin(j theta)`` integrated to ``1e-13`` for ``j <= J``.

        Certified numerically per panel; the trigonometric degree never
        reaches the polynomial exactness ``2 n - 1`` of Gauss-Legendre.
        """
        j = 0
        worst = 0
        while True:
            c = self.theta_weights @ np.cos(j * self.theta)
            s = self.theta_weights @ np.sin(j * self.theta)
            lo, hi = self.panels[0], self.panels[-1]
            if j == 0:
                ec, es = hi - lo, 0.0
            else:
                ec = (np.sin(j * hi) - np.sin(j * lo)) / j
                es = (np.cos(j * lo) - np.cos(j * hi)) / j
            if abs(c - ec) > _CERT_TOL * np.pi or abs(s - es) > _CERT_TOL * np.pi:
                return worst
            worst = j
            j += 1
            if j > 4 * self.n_theta:
                return worst

    def resolves(self, theta_degree: int, phi_frequency: int) -> bool:
        return theta_degree <= self.theta_degree and phi_frequency < self.n_phi


def gauss_rule(n_theta: int, n_phi: int, panels=(0.0, np.pi)) -> QuadratureRule:
    """Gauss-Legendre in theta on every panel (``n_theta`` nodes each), uniform in phi."""
    if n_theta < 1 or n_phi < 1:
        raise QuadratureError("quadrature needs at least one node in each direction")
    x, w = np.polynomial.legendre.leggauss(int(n_theta))
    edges = [float(p) for p in panels]
    th, tw = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        half = 0.5 * (hi - lo)
        th.append(lo + half * (x + 1.0))
        tw.append(half * w)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    pw = np.full(n_phi, 2.0 * np.pi / n_phi)
    return QuadratureRule(
        theta=np.concatenate(th),
        theta_weights=np.concatenate(tw),
        phi=phi,
        phi_weights=pw,
        panels=tuple(edges),
        n_per_panel=int(n_theta),
    )


def default_rule(l_max: int, surface=None) -> QuadratureRule:
    """Resolution for Gram products of degree ``<= l_max`` on ``surface``.

    The Gram integrand ``Y_i conj(Y_j) / |r|**(m + 2)`` of a degree-``N``
    harmonic surface is a trigonometric polynomial of degree up to
    ``D = 2 l_max + (2 l_max + 2) N``; theta gets enough nodes to certify
    that degree and phi gets ``D + 8`` points.
    """
    N = getattr(surface, "degree", 0) if surface is not None else 0
    panels = getattr(surface, "breakpoints", (0.0, np.pi)) if surface is not None else (0.0, np.pi)
    D = 2 * l_max + (2 * l_max + 2) * N
    n_panels = max(len(panels) - 1, 1)
    if n_panels == 1:
        n_theta = int(np.ceil(D / 0.6)) + 12
    else:
        # smooth pieces on short panels; keep enough nodes per panel
        n_theta = max(16, int(np.ceil(D / 0.6 / n_panels)) + 12)
    # axisymmetric surfaces only couple equal orders: net frequency <= 2 l_max
    n_phi = 2 * l_max + 8 if getattr(surface, "axisymmetric", False) else D + 8
    return gauss_rule(n_theta, n_phi, panels)


def integrate(f, rule: QuadratureRule) -> complex:
    """Tensor-product quadrature of ``f`` (callable ``f(theta, phi)`` or node values)."""
    th, ph, w = rule.flat
    vals = f(th, ph) if callable(f) else np.asarray(f)
    vals = np.asarray(vals).reshape(-1)
    if vals.size != w.size:
        raise QuadratureError(f"expected {w.size} node values, got {vals.size}")
    bad = ~np.isfinite(vals)
    if np.any(bad):
        q = int(np.argmax(bad))
        raise QuadratureError(f"integrand not finite at node theta={th[q]:.6g}, phi={ph[q]:.6g}")
    return complex(w @ vals)


class _HarmonicNodes:
    """Harmonic values on a rule's nodes, grown on demand (populate-once)."""

    def __init__(self, rule: QuadratureRule):
        self.rule = rule
        self.table = None
        self.lock = threading.Lock()

    def Y(self, count: int) -> np.ndarray:
        tab = self.table
        if tab is None or tab.shape[0] < count:
            with self.lock:
                tab = self.table
                if tab is None or tab.shape[0] < count:
                    th, ph, _ = self.rule.flat
                    tab = harmonic_table(count, th, ph).Y
                    self.table = tab
        return tab[:count]


_cache_lock = threading.Lock()
_node_cache: dict[tuple, _HarmonicNodes] = {}
_integral_cache: dict[tuple, complex] = {}


def _nodes_for(rule: QuadratureRule) -> _HarmonicNodes:
    with _cache_lock:
        hn = _node_cache.get(rule.key)
        if hn is None:
            hn = _node_cache[rule.key] = _HarmonicNodes(rule)
    return hn


def _product_field(d: MultiIndex, Y: np.ndarray) -> np.ndarray:
    out = np.ones(Y.shape[1], dtype=np.complex128)
    for r, v in d.items:
        out *= Y[r] ** v
    return out


def _check_resolution(d: MultiIndex, rule: QuadratureRule, extra_degree: int = 0, extra_freq: int = 0):
    deg = d.degree() + extra_degree
    freq = d.frequency_bound() + extra_freq
    if not rule.resolves(deg, freq):
        raise QuadratureError(
            f"rule (theta degree {rule.theta_degree}, n_phi {rule.n_phi}) cannot resolve a product of"
            f" harmonic degree {deg} and azimuthal frequency {freq}"
        )


def product_harmonic_integral(d: MultiIndex, rule: QuadratureRule) -> complex:
    """``I^d``: integral of ``prod_l Y_l**d(l)`` over the parameter rectangle (cached by ``d``)."""
    key = (rule.key, d)
    val = _integral_cache.get(key)
    if val is not None:
        return val
    _check_resolution(d, rule)
    top = d.items[-1][0] + 1 if d.items else 1
    Y = _nodes_for(rule).Y(top)
    _, _, w = rule.flat
    val = complex(w @ _product_field(d, Y))
    with _cache_lock:
        val = _integral_cache.setdefault(key, val)
    return val


def product_harmonic_matrix(d: MultiIndex, count: int, rule: QuadratureRule) -> np.ndarray:
    """``J[i, j] = I^{d + e_i + e_conj(j)}`` for all ranks ``i, j < count``.

    Batched form of :func:`product_harmonic_integral`: one product field and
    a single weighted matrix product instead of ``count**2`` scalar integrals.
    """
    lmax = unrank(count - 1).l
    _check_resolution(d, rule, extra_degree=2 * lmax, extra_freq=2 * lmax)
    top = max(count, d.items[-1][0] + 1 if d.items else 1)
    Y = _nodes_for(rule).Y(top)
    _, _, w = rule.flat
    F = w * _product_field(d, Y)
    Yi = Y[:count]
    _, ms = index_arrays(count)
    sign = np.where(ms % 2 == 0, 1.0, -1.0)
    Ycj = sign[:, None] * np.conj(Yi)  # Y_{l,-m}
    return (Yi * F) @ Ycj.T


def clear_caches() -> None:
    with _cache_lock:
        _node_cache.clear()
        _integral_cache.clear()
