"""Boundary-orthonormal outgoing waves.

Given the Gram matrix ``G`` of the raw waves ``Psi_k`` restricted to the
boundary, build the lower-triangular ``C`` with ``C G C^H = I`` so that

    hat Psi_n = sum_{k <= n} c_nk Psi_k

is orthonormal under ``dtheta dphi``. ``lambda_n`` is the norm of ``Psi_n``
after removing its projections on ``hat Psi_0 .. hat Psi_{n-1}``, hence
``c_nn = 1 / lambda_n``. The main route is a Cholesky factorization
``G = L L^H`` (then ``C = L^{-1}`` and ``lambda_n = L_nn``); the sequential
Gram-Schmidt recursion is kept for verification.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .gram import GramData
from .indexing import AngularIndex, index_arrays, unrank
from .special import hankel_table, harmonic_table

logger = logging.getLogger(__name__)

__all__ = [
    "BasisTransform",
    "ConditioningError",
    "DecayReport",
    "basis_values",
    "cartesian_to_spherical",
    "decay_report",
    "evaluate_basis",
    "orthonormalize",
    "orthonormalize_recursive",
    "raw_waves",
]

SEMIDEFINITE_EPS = 1e-13


class ConditioningError(ArithmeticError):
    """Gram matrix numerically semi-definite at ``rank``."""

    def __init__(self, rank: int, lam2: float, gnn: float):
        idx = unrank(rank)
        super().__init__(
            f"Gram matrix is numerically semi-definite at rank {rank} (l={idx.l}, m={idx.m}):"
            f" lambda^2 = {lam2:.3e} vs g_nn = {gnn:.3e}"
        )
        self.rank = rank
        self.index = idx


@dataclass(frozen=True)
class BasisTransform:
    """Lower-triangular transform ``C`` and projected norms ``lam`` at wavenumber ``k``."""

    C: np.ndarray
    lam: np.ndarray
    k: float
    ls: np.ndarray
    ms: np.ndarray
    method: str = "cholesky"

    @property
    def count(self) -> int:
        return self.lam.size

    def orthonormality_error(self, G) -> float:
        """Frobenius norm of ``C G C^H - I``."""
        G = G.matrix if isinstance(G, GramData) else np.asarray(G)
        E = self.C @ G @ self.C.conj().T
        return float(np.linalg.norm(E - np.eye(self.count)))

    def truncated(self, count: int) -> "BasisTransform":
        """Transform for a smaller truncation (the triangular structure nests)."""
        return BasisTransform(
            self.C[:count, :count], self.lam[:count], self.k, self.ls[:count], self.ms[:count], self.method
        )


def _as_matrix(G) -> tuple[np.ndarray, float, np.ndarray, np.ndarray]:
    if isinstance(G, GramData):
        return G.matrix, G.k, G.ls, G.ms
    M = np.asarray(G, dtype=np.complex128)
    ls, ms = index_arrays(M.shape[0])
    return M, float("nan"), ls, ms


def orthonormalize(G, eps: float = SEMIDEFINITE_EPS) -> BasisTransform:
    """Cholesky route to the orthonormalizing transform.

    Raises
    ------
    ConditioningError
        If some ``lambda_n**2 < eps * g_nn`` (or the factorization breaks down).
    """
    M, k, ls, ms = _as_matrix(G)
    n = M.shape[0]
    try:
        Lf = scipy.linalg.cholesky(M, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        # locate the failing rank with the sequential recursion
        _, lam, failed = kernels.gram_schmidt(np.ascontiguousarray(M), eps)
        failed = failed if failed >= 0 else n - 1
        raise ConditioningError(failed, float("nan"), float(M[failed, failed].real)) from None
    lam = np.real(np.diag(Lf)).copy()
    gnn = np.real(np.diag(M))
    bad = np.flatnonzero(~(lam**2 >= eps * gnn))
    if bad.size:
        r = int(bad[0])
        raise ConditioningError(r, float(lam[r] ** 2), float(gnn[r]))
    C = scipy.linalg.solve_triangular(Lf, np.eye(n, dtype=np.complex128), lower=True)
    C = np.tril(C)
    C[np.diag_indices(n)] = 1.0 / lam
    logger.debug("orthonormalized %d waves, min lambda %.3e", n, lam.min())
    return BasisTransform(C, lam, k, ls, ms, "cholesky")


def orthonormalize_recursive(G, eps: float = SEMIDEFINITE_EPS) -> BasisTransform:
    """Literal Gram-Schmidt recursion in index order (verification path)."""
    M, k, ls, ms = _as_matrix(G)
    C, lam, failed = kernels.gram_schmidt(np.ascontiguousarray(M), eps)
    if failed >= 0:
        raise ConditioningError(failed, float("nan"), float(M[failed, failed].real))
    return BasisTransform(C, lam, k, ls, ms, "recursion")


def cartesian_to_spherical(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(|r|, theta, phi)`` of an ``(..., 3)`` array; the origin is rejected."""
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != 3:
        raise ValueError("points must have a trailing dimension of 3")
    rho = np.linalg.norm(p, axis=-1)
    if np.any(~(rho > 0)):
        raise ValueError("outgoing waves are singular at the origin")
    theta = np.arccos(np.clip(p[..., 2] / rho, -1.0, 1.0))
    phi = np.mod(np.arctan2(p[..., 1], p[..., 0]), 2 * np.pi)
    return rho, theta, phi


def raw_waves(count: int, k: float, points) -> np.ndarray:
    """``Psi_n(r) = Y_n h_{l_n}(k|r|)`` for ranks ``< count``; shape ``(count, npts)``."""
    rho, theta, phi = cartesian_to_spherical(np.reshape(points, (-1, 3)))
    tab = harmonic_table(count, theta, phi)
    h, _ = hankel_table(int(tab.ls[-1]), k * rho)
    return tab.Y * h[tab.ls]


def basis_values(transform: BasisTransform, points) -> np.ndarray:
    """All ``hat Psi_n`` at exterior points, shape ``(count, npts)``."""
    return transform.C @ raw_waves(transform.count, transform.k, points)


def evaluate_basis(transform: BasisTransform, n, point, surface=None):
    """Value of one orthonormal wave ``hat Psi_n``.

    ``point`` is either Cartesian ``(x, y, z)`` or a boundary parameter pair
    ``(theta, phi)``, in which case ``surface`` places it on the boundary.
    """
    idx = n if isinstance(n, AngularIndex) else AngularIndex(*n)
    if idx.rank >= transform.count:
        raise ValueError(f"index {tuple(idx)} lies outside the truncation")
    p = np.asarray(point, dtype=float)
    if p.shape[-1] == 2:
        if surface is None:
            raise ValueError("boundary parameters need a surface")
        s = surface.sample(p[..., 0], p[..., 1])
        p = s.points
    sub = transform.truncated(idx.rank + 1)
    vals = sub.C[idx.rank] @ raw_waves(sub.count, transform.k, p)
    out = vals.reshape(p.shape[:-1])
    return out[()] if out.ndim == 0 else out


@dataclass
class DecayReport:
    """Monitors for the triangular transform.

    ``column_sup[k] = max_n |c_nk| * l_k!`` should stay bounded;
    ``min_lambda`` should stay away from zero as the truncation grows.
    """

    column_sup: np.ndarray
    lambda_by_degree: np.ndarray
    min_lambda: float
    C1: float
    C2: float

    def to_dict(self) -> dict:
        return {
            "column_sup": self.column_sup.tolist(),
            "lambda_min_by_degree": self.lambda_by_degree.tolist(),
            "min_lambda": self.min_lambda,
            "C1": self.C1,
            "C2": self.C2,
        }


def decay_report(transform: BasisTransform) -> DecayReport:
    fact = np.array([math.factorial(int(l)) for l in transform.ls], dtype=float)
    col = np.max(np.abs(transform.C), axis=0) * fact
    lmax = int(transform.ls[-1])
    by_deg = np.array([transform.lam[transform.ls == l].min() for l in range(lmax + 1)])
    return DecayReport(col, by_deg, float(transform.lam.min()), float(col.max()), float(transform.lam.min()))
