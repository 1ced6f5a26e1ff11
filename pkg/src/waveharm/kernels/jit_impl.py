"""numba-compiled versions of the hot loops.

Loops over independent points (in contiguous chunks) or rows run under
``prange``; each output element is reduced in a fixed order, so results do
not depend on the thread count.
"""

import numpy as np
from numba import njit, prange

INV_SQRT_4PI = 1.0 / np.sqrt(4.0 * np.pi)


CHUNK = 256


@njit(cache=True)
def _legendre_coefficients(lmax):
    a = np.zeros((lmax + 1, lmax + 1))
    b = np.zeros((lmax + 1, lmax + 1))
    for m in range(lmax + 1):
        for l in range(m + 2, lmax + 1):
            a[l, m] = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b[l, m] = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
    return a, b


@njit(cache=True, inline="always")
def _three_term(out, p1, p2, x, a, b):
    for q in range(out.shape[0]):
        out[q] = a * (x[q] * p1[q] - b * p2[q])


@njit(cache=True, parallel=True)
def legendre_table(lmax, x, s):
    npts = x.shape[0]
    P = np.empty((lmax + 1, lmax + 1, npts))
    Q = np.empty((lmax + 1, lmax + 1, npts))
    a, b = _legendre_coefficients(lmax)
    nchunk = (npts + CHUNK - 1) // CHUNK
    for c in prange(nchunk):
        lo = c * CHUNK
        hi = min(lo + CHUNK, npts)
        for l in range(lmax + 1):
            for m in range(l + 1, lmax + 1):
                for q in range(lo, hi):
                    P[l, m, q] = 0.0
                    Q[l, m, q] = 0.0
        for q in range(lo, hi):
            P[0, 0, q] = INV_SQRT_4PI
            Q[0, 0, q] = 0.0
        for m in range(lmax + 1):
            if m > 0:
                g = -np.sqrt((2.0 * m + 1.0) / (2.0 * m))
                for q in range(lo, hi):
                    Q[m, m, q] = g * P[m - 1, m - 1, q]
                    P[m, m, q] = Q[m, m, q] * s[q]
            if m < lmax:
                f = np.sqrt(2.0 * m + 3.0)
                for q in range(lo, hi):
                    P[m + 1, m, q] = f * x[q] * P[m, m, q]
                    Q[m + 1, m, q] = f * x[q] * Q[m, m, q]
            for l in range(m + 2, lmax + 1):
                al, bl = a[l, m], b[l, m]
                _three_term(P[l, m, lo:hi], P[l - 1, m, lo:hi], P[l - 2, m, lo:hi], x[lo:hi], al, bl)
                _three_term(Q[l, m, lo:hi], Q[l - 1, m, lo:hi], Q[l - 2, m, lo:hi], x[lo:hi], al, bl)
    return P, Q


@njit(cache=True, parallel=True)
def hankel_table(coeffs, t):
    nmax = coeffs.shape[0] - 1
    npts = t.shape[0]
    h = np.empty((nmax + 1, npts), dtype=np.complex128)
    dh = np.empty((nmax + 1, npts), dtype=np.complex128)
    for q in prange(npts):
        inv = 1.0 / t[q]
        e = np.exp(1j * t[q])
        for n in range(nmax + 1):
            acc = 0.0 + 0.0j
            dacc = 0.0 + 0.0j
            for j in range(n, -1, -1):
                acc = acc * inv + coeffs[n, j]
                dacc = dacc * inv + (j + 1.0) * coeffs[n, j]
            h[n, q] = e * inv * acc
            dh[n, q] = e * inv * (1j * acc - inv * dacc)
    return h, dh


@njit(cache=True, parallel=True)
def assemble_moments(p, sign, k):
    n = p.shape[0]
    nm = p.shape[2]
    kpow = np.empty(nm)
    for m in range(nm):
        kpow[m] = k ** (-(m + 2.0))
    g = np.zeros((n, n), dtype=np.complex128)
    for i in prange(n):
        for j in range(n):
            acc = 0.0 + 0.0j
            for m in range(nm):
                acc += p[i, j, m] * kpow[m]
            g[i, j] = acc * sign[j]
    return g


@njit(cache=True)
def gram_schmidt(G, eps):
    n = G.shape[0]
    C = np.zeros((n, n), dtype=np.complex128)
    lam = np.zeros(n)
    proj = np.zeros(n, dtype=np.complex128)
    for nn in range(n):
        lam2 = G[nn, nn].real
        for kk in range(nn):
            s = 0.0 + 0.0j
            for p in range(kk + 1):
                s += np.conj(C[kk, p]) * G[nn, p]
            proj[kk] = s
            lam2 -= s.real * s.real + s.imag * s.imag
        if not lam2 > eps * G[nn, nn].real:
            return C, lam, nn
        lam[nn] = np.sqrt(lam2)
        C[nn, nn] = 1.0 / lam[nn]
        for m in range(nn):
            s = 0.0 + 0.0j
            for kk in range(m, nn):
                s += proj[kk] * C[kk, m]
            C[nn, m] = -s / lam[nn]
    return C, lam, -1


@njit(cache=True)
def sigma_double_sum(C, uhat, k):
    n = C.shape[0]
    total = 0.0 + 0.0j
    for m in range(n):
        before = 0.0 + 0.0j
        for nn in range(m, n):
            x = C[nn, m] * uhat[nn]
            total += np.conj(x) * (x + 2.0 * before)
            before += x
    return total.real / (k * k)
