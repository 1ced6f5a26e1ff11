"""Star-shaped surfaces ``r(theta, phi) = |r(theta, phi)| * rhat``.

Four geometry families share one sampling interface:

* :class:`Sphere` of radius ``R``;
* :class:`HarmonicStarSurface`, whose *inverse* radius is a finite sum of
  spherical harmonics ``1/|r| = sum_l a_l Y_l``;
* :class:`RevolutionPolyline`, a body of revolution whose meridian is a
  polyline, each piece satisfying ``a_i r cos(theta) + b_i r sin(theta) = f_i``;
* :class:`RadialMapSurface`, a caller supplied radius function.

``sample`` returns radius, partials, the area density ``g2`` of
``dS = g2 dtheta dphi`` and the outward unit normal. Every surface counts the
points it has evaluated in :attr:`evaluations`, which lets callers prove that
cached node data is being reused.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .indexing import AngularIndex, rank, unrank
from .special import harmonic_table

__all__ = [
    "GeometryError",
    "HarmonicStarSurface",
    "RadialMapSurface",
    "RevolutionPolyline",
    "Sphere",
    "Surface",
    "SurfaceSample",
    "ValidationReport",
    "surface_from_dict",
    "validate",
]


class GeometryError(ValueError):
    """Invalid or degenerate geometry; the message names the location or field."""


@dataclass(frozen=True)
class SurfaceSample:
    """Surface quantities on a set of parameter points (all arrays share a shape)."""

    theta: np.ndarray
    phi: np.ndarray
    radius: np.ndarray
    dr_dtheta: np.ndarray
    dr_dphi: np.ndarray
    dr_dphi_over_sin: np.ndarray
    density: np.ndarray
    normal: np.ndarray  # (..., 3)

    @property
    def points(self) -> np.ndarray:
        return self.radius[..., None] * _rhat(self.theta, self.phi)


def _rhat(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _frame(theta, phi):
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    rhat = np.stack([st * cp, st * sp, ct], axis=-1)
    that = np.stack([ct * cp, ct * sp, -st], axis=-1)
    phat = np.stack([-sp, cp, np.zeros_like(cp)], axis=-1)
    return rhat, that, phat


@dataclass
class ValidationReport:
    ok: bool
    min_radius: float
    max_radius: float
    min_density: float
    max_density: float
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "min_radius": self.min_radius,
            "max_radius": self.max_radius,
            "min_density": self.min_density,
            "max_density": self.max_density,
            "violations": list(self.violations),
        }

    def raise_if_failed(self) -> "ValidationReport":
        if not self.ok:
            raise GeometryError("; ".join(self.violations))
        return self


class Surface:
    """Base class. Subclasses implement :meth:`_partials` and :meth:`to_dict`."""

    #: harmonic degree that drives default quadrature resolution
    degree: int = 0
    #: theta values where the profile has kinks (quadrature panels split here)
    breakpoints: tuple[float, ...] = (0.0, np.pi)
    axisymmetric: bool = False

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.evaluations = 0

    def _count(self, n: int) -> None:
        with self._lock:
            self.evaluations += int(n)

    def _partials(self, theta, phi):
        """Return ``(r, dr/dtheta, dr/dphi, (dr/dphi)/sin(theta))``."""
        raise NotImplementedError

    def radius(self, theta, phi=0.0):
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        self._count(theta.size)
        r = self._radius_only(theta, phi)
        _check_radius(r, theta, phi)
        return r

    def _radius_only(self, theta, phi):
        return self._partials(theta, phi)[0]

    def sample(self, theta, phi) -> SurfaceSample:
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        self._count(theta.size)
        r, rt, rp, rps = self._partials(theta, phi)
        _check_radius(r, theta, phi)
        st = np.sin(theta)
        density = r * np.sqrt((r**2 + rt**2) * st**2 + rp**2)
        rhat, that, phat = _frame(theta, phi)
        nvec = r[..., None] * rhat - rt[..., None] * that - rps[..., None] * phat
        nvec /= np.linalg.norm(nvec, axis=-1, keepdims=True)
        return SurfaceSample(theta, phi, r, rt, rp, rps, density, nvec)

    def is_exterior(self, points, rtol: float = 1e-12) -> np.ndarray:
        """Radial test: ``|p| >= r(direction of p)`` (boundary points count as exterior)."""
        points = np.atleast_2d(np.asarray(points, float))
        rho = np.linalg.norm(points, axis=-1)
        out = np.zeros(rho.shape, dtype=bool)
        good = rho > 0
        th = np.arccos(np.clip(points[good, 2] / rho[good], -1.0, 1.0))
        ph = np.mod(np.arctan2(points[good, 1], points[good, 0]), 2 * np.pi)
        out[good] = rho[good] >= self.radius(th, ph) * (1.0 - rtol)
        return out

    def to_dict(self) -> dict:
        raise NotImplementedError

    def geometry_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _check_radius(r, theta, phi) -> None:
    bad = ~(np.isfinite(r) & (r > 0))
    if np.any(bad):
        q = np.argwhere(bad)[0]
        q = tuple(q) if np.ndim(r) else ()
        raise GeometryError(
            f"radius not finite and positive at theta={float(theta[q]):.6g}, phi={float(phi[q]):.6g}"
            f" (r={float(r[q]):.6g})"
        )


class Sphere(Surface):
    def __init__(self, radius: float = 1.0):
        super().__init__()
        if not (np.isfinite(radius) and radius > 0):
            raise GeometryError(f"sphere radius must be positive, got {radius}")
        self.R = float(radius)
        self.axisymmetric = True

    def _partials(self, theta, phi):
        r = np.full(np.shape(theta), self.R)
        z = np.zeros(np.shape(theta))
        return r, z, z, z

    def to_dict(self) -> dict:
        return {"type": "sphere", "radius": self.R}


class HarmonicStarSurface(Surface):
    """Surface with ``1/|r(theta, phi)| = sum_{l <= (N, N)} a_l Y_l(theta, phi)``.

    Parameters
    ----------
    coeffs : mapping ``(l, m) -> complex``
        Missing partners ``a_{l,-m}`` are filled from the reality constraint
        ``a_{l,-m} = (-1)**m conj(a_{l,m})``; inconsistent partners are rejected.
    N : int, optional
        Degree bound; defaults to the largest degree present.
    """

    def __init__(self, coeffs: dict, N: int | None = None, tol: float = 1e-12):
        super().__init__()
        acc: dict[tuple[int, int], complex] = {}
        for key, val in coeffs.items():
            l, m = key
            AngularIndex(l, m)
            acc[(l, m)] = acc.get((l, m), 0.0) + complex(val)
        for (l, m), val in list(acc.items()):
            partner = (-1) ** m * np.conj(val)
            if (l, -m) in acc:
                if abs(acc[(l, -m)] - partner) > tol * max(1.0, abs(val)):
                    raise GeometryError(
                        f"coefficients ({l},{m}) and ({l},{-m}) violate the reality constraint"
                    )
            else:
                acc[(l, -m)] = partner
        for (l, m), val in acc.items():
            if m == 0 and abs(val.imag) > tol * max(1.0, abs(val)):
                raise GeometryError(f"coefficient ({l},0) must be real, got {val}")
        degree = max((l for l, _ in acc), default=0)
        if N is None:
            N = degree
        if degree > N:
            raise GeometryError(f"coefficient degree {degree} exceeds bound N={N}")
        self.N = int(N)
        self.degree = self.N
        self.count = rank(self.N, self.N) + 1
        self.a = np.zeros(self.count, dtype=np.complex128)
        for (l, m), val in acc.items():
            self.a[rank(l, m)] = val
        self.axisymmetric = all(abs(v) == 0 for (l, m), v in acc.items() if m != 0)

    @classmethod
    def sphere(cls, radius: float = 1.0) -> "HarmonicStarSurface":
        return cls({(0, 0): np.sqrt(4 * np.pi) / radius})

    def coefficient(self, l: int, m: int) -> complex:
        return complex(self.a[rank(l, m)]) if rank(l, m) < self.count else 0.0

    def nonzero_ranks(self) -> list[int]:
        return [int(r) for r in np.flatnonzero(self.a)]

    def inverse_radius(self, theta, phi):
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        tab = harmonic_table(self.count, theta.ravel(), phi.ravel())
        return (self.a @ tab.Y).real.reshape(theta.shape)

    def _partials(self, theta, phi):
        shape = np.shape(theta)
        tab = harmonic_table(self.count, np.ravel(theta), np.ravel(phi))
        rho = (self.a @ tab.Y).real
        rho_t = (self.a @ tab.dtheta).real
        rho_ps = (self.a @ tab.dphi_over_sin).real
        rho_p = rho_ps * np.sin(np.ravel(theta))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(rho > 0, 1.0 / rho, np.inf)
        r2 = r * r
        return (
            r.reshape(shape),
            (-rho_t * r2).reshape(shape),
            (-rho_p * r2).reshape(shape),
            (-rho_ps * r2).reshape(shape),
        )

    def to_dict(self) -> dict:
        out = []
        for rk in range(self.count):
            if self.a[rk] != 0:
                idx = unrank(rk)
                out.append({"l": idx.l, "m": idx.m, "re": float(self.a[rk].real), "im": float(self.a[rk].imag)})
        return {"type": "harmonic", "N": self.N, "coeffs": out}


class RevolutionPolyline(Surface):
    """Body of revolution of a polyline meridian.

    On segment ``i`` (``theta_{i-1} <= theta <= theta_i``) the radius is
    ``f_i / (a_i cos(theta) + b_i sin(theta))``. At a breakpoint the left
    segment is used, so derivatives there are one-sided from the left.
    """

    def __init__(self, breakpoints, segments, continuity_tol: float = 1e-9):
        super().__init__()
        bp = np.asarray(breakpoints, dtype=float)
        seg = np.asarray(segments, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise GeometryError("breakpoints: need at least two values")
        if abs(bp[0]) > 1e-14 or abs(bp[-1] - np.pi) > 1e-12:
            raise GeometryError("breakpoints: must start at 0 and end at pi")
        if np.any(np.diff(bp) < 0):
            raise GeometryError("breakpoints: must be non-decreasing")
        if seg.shape != (bp.size - 1, 3):
            raise GeometryError(f"segments: expected {bp.size - 1} rows of (a, b, f), got shape {seg.shape}")
        for i, (a, b, f) in enumerate(seg):
            if f == 0:
                raise GeometryError(f"segments[{i}]: f must be non-zero")
        bp[0], bp[-1] = 0.0, np.pi
        self.theta_breaks = bp
        self.a_coef, self.b_coef, self.f_coef = seg[:, 0].copy(), seg[:, 1].copy(), seg[:, 2].copy()
        self.breakpoints = tuple(float(x) for x in bp)
        self.continuity_tol = continuity_tol
        self.axisymmetric = True
        self.degree = 1

    @property
    def n_segments(self) -> int:
        return self.f_coef.size

    def segment_index(self, theta) -> np.ndarray:
        idx = np.searchsorted(self.theta_breaks, theta, side="left") - 1
        return np.clip(idx, 0, self.n_segments - 1)

    def segment_radius(self, i: int, theta):
        c, s = np.cos(theta), np.sin(theta)
        return self.f_coef[i] / (self.a_coef[i] * c + self.b_coef[i] * s)

    def _partials(self, theta, phi):
        theta = np.asarray(theta, float)
        i = self.segment_index(theta)
        a, b, f = self.a_coef[i], self.b_coef[i], self.f_coef[i]
        c, s = np.cos(theta), np.sin(theta)
        den = a * c + b * s
        with np.errstate(divide="ignore", invalid="ignore"):
            r = f / den
            rt = -f * (-a * s + b * c) / den**2
        z = np.zeros_like(r)
        return r, rt, z, z

    def to_dict(self) -> dict:
        return {
            "type": "revolution",
            "breakpoints": [float(x) for x in self.theta_breaks],
            "segments": [
                {"a": float(a), "b": float(b), "f": float(f)}
                for a, b, f in zip(self.a_coef, self.b_coef, self.f_coef)
            ],
        }


class RadialMapSurface(Surface):
    """Generic star-shaped surface from a radius callable ``radius_fn(theta, phi)``.

    Partials default to central differences with step ``h``; ``dr_dphi`` at
    the poles is taken as zero.
    """

    def __init__(
        self,
        radius_fn: Callable,
        dtheta_fn: Callable | None = None,
        dphi_fn: Callable | None = None,
        degree: int = 8,
        name: str = "radial",
        h: float = 1e-6,
    ):
        super().__init__()
        self.radius_fn = radius_fn
        self.dtheta_fn = dtheta_fn
        self.dphi_fn = dphi_fn
        self.degree = int(degree)
        self.name = name
        self.h = h

    def _partials(self, theta, phi):
        r = np.asarray(self.radius_fn(theta, phi), float) * np.ones(np.shape(theta))
        if self.dtheta_fn is not None:
            rt = np.asarray(self.dtheta_fn(theta, phi), float)
        else:
            rt = (self.radius_fn(theta + self.h, phi) - self.radius_fn(theta - self.h, phi)) / (2 * self.h)
        if self.dphi_fn is not None:
            rp = np.asarray(self.dphi_fn(theta, phi), float)
        else:
            rp = (self.radius_fn(theta, phi + self.h) - self.radius_fn(theta, phi - self.h)) / (2 * self.h)
        st = np.sin(theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            rps = np.where(st > 1e-12, rp / st, 0.0)
        return r, rt * np.ones_like(r), rp * np.ones_like(r), rps

    def to_dict(self) -> dict:
        return {"type": "radial", "name": self.name}


def validate(surface: Surface, resolution: int | None = None) -> ValidationReport:
    """Check positivity, finiteness and (for polylines) continuity on a grid.

    ``resolution`` is the number of theta lines; phi uses twice as many. The
    default is four times the surface degree with a floor of 32.
    """
    n = resolution or max(32, 4 * max(surface.degree, 1))
    violations: list[str] = []
    th = (np.arange(n) + 0.5) * np.pi / n
    th = np.concatenate([[0.0], th, [np.pi]])
    ph = np.arange(2 * n) * np.pi / n
    TH, PH = np.meshgrid(th, ph, indexing="ij")

    if isinstance(surface, HarmonicStarSurface):
        rho = surface.inverse_radius(TH, PH)
        if np.any(rho <= 0):
            q = np.unravel_index(np.argmin(rho), rho.shape)
            violations.append(
                f"inverse radius not positive at theta={TH[q]:.6g}, phi={PH[q]:.6g} (value {rho[q]:.6g})"
            )
    if isinstance(surface, RevolutionPolyline):
        for i in range(surface.n_segments):
            lo, hi = surface.theta_breaks[i], surface.theta_breaks[i + 1]
            ts = np.linspace(lo, hi, 33)
            with np.errstate(divide="ignore", invalid="ignore"):
                ri = surface.segment_radius(i, ts)
            bad = ~(np.isfinite(ri) & (ri > 0))
            if np.any(bad):
                violations.append(
                    f"segments[{i}]: radius not finite and positive at theta={ts[np.argmax(bad)]:.6g}"
                )
        for i in range(1, surface.n_segments):
            t = surface.theta_breaks[i]
            with np.errstate(divide="ignore", invalid="ignore"):
                left, right = surface.segment_radius(i - 1, t), surface.segment_radius(i, t)
            if not abs(left - right) <= surface.continuity_tol * max(abs(left), abs(right), 1.0):
                violations.append(
                    f"segments[{i - 1}]/segments[{i}]: profile discontinuous at theta={t:.6g} ({left:.6g} vs {right:.6g})"
                )

    min_r = max_r = min_g = max_g = float("nan")
    if not violations:
        try:
            s = surface.sample(TH, PH)
        except GeometryError as exc:
            violations.append(str(exc))
        else:
            min_r, max_r = float(s.radius.min()), float(s.radius.max())
            g = s.density[1:-1]  # density vanishes at the poles by construction
            min_g, max_g = float(g.min()), float(s.density.max())
            if not np.all(np.isfinite(s.density)) or min_g <= 0:
                violations.append("surface density not finite and positive away from the poles")
            if not np.all(np.isfinite(s.normal)):
                violations.append("surface normal not finite")
    return ValidationReport(not violations, min_r, max_r, min_g, max_g, violations)


def surface_from_dict(doc: dict) -> Surface:
    """Build a surface from a geometry description document."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise GeometryError("geometry.type: missing")
    kind = doc["type"]
    try:
        if kind == "sphere":
            return Sphere(float(doc["radius"]))
        if kind == "harmonic":
            coeffs = {}
            for j, c in enumerate(doc["coeffs"]):
                try:
                    coeffs[(int(c["l"]), int(c["m"]))] = complex(float(c.get("re", 0.0)), float(c.get("im", 0.0)))
                except (KeyError, TypeError, ValueError) as exc:
                    raise GeometryError(f"geometry.coeffs[{j}]: {exc}") from None
            return HarmonicStarSurface(coeffs, N=doc.get("N"))
        if kind == "revolution":
            segs = []
            for j, s in enumerate(doc["segments"]):
                try:
                    segs.append((float(s["a"]), float(s["b"]), float(s["f"])))
                except (KeyError, TypeError, ValueError) as exc:
                    raise GeometryError(f"geometry.segments[{j}]: {exc}") from None
            return RevolutionPolyline(doc["breakpoints"], segs)
    except KeyError as exc:
        raise GeometryError(f"geometry.{exc.args[0]}: missing") from None
    raise GeometryError(f"geometry.type: unknown surface type {kind!r}")
