"""Pure-numpy versions of the hot loops.

Every function here has a twin with the same signature in
:mod:`waveharm.kernels.jit_impl`. Loops run over degrees and orders while
the work across sample points is vectorized.
"""

import numpy as np

INV_SQRT_4PI = 1.0 / np.sqrt(4.0 * np.pi)


def legendre_table(lmax, x, s):
    """Fully normalized associated Legendre values for ``0 <= m <= l <= lmax``.

    Parameters
    ----------
    lmax : int
    x, s : ndarray, shape (npts,)
        ``cos(theta)`` and ``sin(theta)``.

    Returns
    -------
    P : ndarray, shape (lmax + 1, lmax + 1, npts)
        ``P[l, m]`` carries the Condon-Shortley phase and the
        ``sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!)`` normalization, so that
        ``P[l, m] * exp(i m phi)`` is the orthonormal spherical harmonic.
    Q : ndarray, same shape
        ``P[l, m] / sin(theta)`` for ``m >= 1``, computed without division
        so that it stays finite at the poles. ``Q[l, 0]`` is zero.
    """
    npts = x.shape[0]
    P = np.zeros((lmax + 1, lmax + 1, npts))
    Q = np.zeros((lmax + 1, lmax + 1, npts))
    pmm = np.full(npts, INV_SQRT_4PI)
    qmm = np.zeros(npts)
    for m in range(lmax + 1):
        if m > 0:
            qmm = -np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * pmm
            pmm = qmm * s
        P[m, m] = pmm
        Q[m, m] = qmm
        if m < lmax:
            f = np.sqrt(2.0 * m + 3.0)
            P[m + 1, m] = f * x * pmm
            Q[m + 1, m] = f * x * qmm
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[l, m] = a * (x * P[l - 1, m] - b * P[l - 2, m])
            Q[l, m] = a * (x * Q[l - 1, m] - b * Q[l - 2, m])
    return P, Q


def hankel_table(coeffs, t):
    """Outgoing spherical waves ``h_n(t)`` and ``h_n'(t)`` for all ``n``.

    ``coeffs[n, j]`` holds the polynomial coefficients of
    ``h_n(t) = exp(i t) / t * sum_j coeffs[n, j] / t**j``.
    """
    nmax = coeffs.shape[0] - 1
    npts = t.shape[0]
    inv = 1.0 / t
    e = np.exp(1j * t)
    h = np.empty((nmax + 1, npts), dtype=np.complex128)
    dh = np.empty((nmax + 1, npts), dtype=np.complex128)
    for n in range(nmax + 1):
        # Horner in 1/t for the value series and its derivative series
        acc = np.zeros(npts, dtype=np.complex128)
        dacc = np.zeros(npts, dtype=np.complex128)
        for j in range(n, -1, -1):
            acc = acc * inv + coeffs[n, j]
            dacc = dacc * inv + (j + 1.0) * coeffs[n, j]
        h[n] = e * inv * acc
        dh[n] = e * inv * (1j * acc - inv * dacc)
    return h, dh


def assemble_moments(p, sign, k):
    """Sum ``sign_j * p[i, j, m] / k**(m + 2)`` over ``m``."""
    kpow = k ** -(np.arange(p.shape[2]) + 2.0)
    return (p @ kpow) * sign[None, :]


def gram_schmidt(G, eps):
    """Sequential Gram-Schmidt on a Gram matrix, written as the recursion.

    Returns ``(C, lam, failed)``; ``failed`` is the first rank whose squared
    norm falls below ``eps * G[n, n]``, or -1.
    """
    n = G.shape[0]
    C = np.zeros((n, n), dtype=np.complex128)
    lam = np.zeros(n)
    for nn in range(n):
        # proj[k] = (Psi_n, hat Psi_k) = sum_{p <= k} conj(c_kp) g_np
        proj = np.conj(C[:nn, :nn + 1]) @ G[nn, :nn + 1] if nn else np.zeros(0, complex)
        gnn = G[nn, nn].real
        lam2 = gnn - np.sum(np.abs(proj) ** 2)
        if not lam2 > eps * gnn:
            return C, lam, nn
        lam[nn] = np.sqrt(lam2)
        C[nn, nn] = 1.0 / lam[nn]
        if nn:
            C[nn, :nn] = -(proj @ C[:nn, :nn]) / lam[nn]
    return C, lam, -1


def sigma_double_sum(C, uhat, k):
    """Total cross section from the expanded double sum over ``n`` and ``m``.

    For each column ``m`` the term is ``conj(x_n) (x_n + 2 sum_{m<=l<n} x_l)``
    with ``x_n = c_nm uhat_n``; the real part of the total is returned.
    """
    n = C.shape[0]
    total = 0.0 + 0.0j
    for m in range(n):
        x = C[m:, m] * uhat[m:]
        before = np.cumsum(x) - x
        total += np.sum(np.conj(x) * (x + 2.0 * before))
    return total.real / (k * k)
