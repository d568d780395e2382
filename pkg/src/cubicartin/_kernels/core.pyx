# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: characteristic-function grids, Monte Carlo sampling,
Frobenius splitting-type ladders, multiplicative coefficient sieves.

Semantics match _kernels/fallback.py; the Monte Carlo sampler is
bit-identical to it (integer hash, fixed accumulation order)."""

import numpy as np

from libc.math cimport cos, sin
from libc.stdint cimport int8_t, int64_t, uint8_t, uint32_t, uint64_t

BACKEND = "cython"
SKIP_SENTINEL = 5

cdef double _INV53 = 2.0 ** -53
cdef uint64_t _GOLD = 0x9E3779B97F4A7C15ULL
cdef uint64_t _M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t _M2 = 0x94D049BB133111EBULL


def char_grid(double[:, ::1] theta, double[:, ::1] weights, Py_ssize_t n, double dxi):
    """prod_p sum_a weights[p,a] exp(i xi theta[p,a]) on the grid xi_j = j*dxi."""
    out_re_arr = np.ones(n, dtype=np.float64)
    out_im_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out_re = out_re_arr
    cdef double[::1] out_im = out_im_arr
    cdef Py_ssize_t n_p = theta.shape[0]
    cdef Py_ssize_t i, j, a
    cdef double dphi[5]
    cdef double rot_re[5]
    cdef double rot_im[5]
    cdef double z_re[5]
    cdef double z_im[5]
    cdef double w[5]
    cdef double acc_re, acc_im, tr, ti, zr
    for i in range(n_p):
        for a in range(5):
            dphi[a] = dxi * theta[i, a]
            rot_re[a] = cos(dphi[a])
            rot_im[a] = sin(dphi[a])
            w[a] = weights[i, a]
        for j in range(n):
            if (j & 8191) == 0:
                for a in range(5):
                    z_re[a] = cos(j * dphi[a])
                    z_im[a] = sin(j * dphi[a])
            acc_re = 0.0
            acc_im = 0.0
            for a in range(5):
                acc_re += w[a] * z_re[a]
                acc_im += w[a] * z_im[a]
            tr = out_re[j] * acc_re - out_im[j] * acc_im
            ti = out_re[j] * acc_im + out_im[j] * acc_re
            out_re[j] = tr
            out_im[j] = ti
            for a in range(5):
                zr = z_re[a] * rot_re[a] - z_im[a] * rot_im[a]
                z_im[a] = z_re[a] * rot_im[a] + z_im[a] * rot_re[a]
                z_re[a] = zr
    return out_re_arr + 1j * out_im_arr


def mc_block(uint64_t seed, uint64_t base, Py_ssize_t nsamples,
             double[:, ::1] cumw, double[:, ::1] fvals, double shift):
    """Random-model samples; see fallback.mc_block for the exact definition."""
    out_arr = np.empty(nsamples, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n_p = cumw.shape[0]
    cdef Py_ssize_t s, i
    cdef uint64_t k, z
    cdef double u, acc
    cdef int t
    for s in range(nsamples):
        acc = shift
        k = (base + <uint64_t> s) * <uint64_t> n_p
        for i in range(n_p):
            z = seed + (k + <uint64_t> (i + 1)) * _GOLD
            z ^= z >> 30
            z *= _M1
            z ^= z >> 27
            z *= _M2
            z ^= z >> 31
            u = <double> (z >> 11) * _INV53
            t = 0
            if u >= cumw[i, 0]:
                t += 1
            if u >= cumw[i, 1]:
                t += 1
            if u >= cumw[i, 2]:
                t += 1
            if u >= cumw[i, 3]:
                t += 1
            acc += fvals[i, t]
        out[s] = acc
    return out_arr


# ---------------------------------------------------------------------------
# Montgomery arithmetic (32-bit, odd modulus) and the Frobenius ladder

cdef inline uint32_t _montmul(uint32_t a, uint32_t b, uint32_t p, uint32_t npr) nogil:
    cdef uint64_t t = <uint64_t> a * b
    cdef uint32_t m = (<uint32_t> t) * npr
    t = (t + <uint64_t> m * p) >> 32
    if t >= p:
        t -= p
    return <uint32_t> t


cdef inline uint32_t _addm(uint32_t a, uint32_t b, uint32_t p) nogil:
    cdef uint32_t s = a + b
    if s >= p or s < a:
        s -= p
    return s


cdef inline uint32_t _negm(uint32_t a, uint32_t p) nogil:
    return p - a if a else 0


cdef inline bint _splits_completely(int64_t b, int64_t c, int64_t d,
                                    uint32_t p, uint32_t npr, uint32_t r2,
                                    uint32_t one_m, int hb) nogil:
    """x^p == x in F_p[x]/(x^3+bx^2+cx+d), f squarefree mod p."""
    cdef uint32_t bm = _montmul(<uint32_t> (b % p + p if b % p < 0 else b % p), r2, p, npr)
    cdef uint32_t cm = _montmul(<uint32_t> (c % p + p if c % p < 0 else c % p), r2, p, npr)
    cdef uint32_t dm = _montmul(<uint32_t> (d % p + p if d % p < 0 else d % p), r2, p, npr)
    cdef uint32_t n2 = _negm(bm, p)
    cdef uint32_t n1 = _negm(cm, p)
    cdef uint32_t n0 = _negm(dm, p)
    cdef uint32_t q2 = _addm(_montmul(n2, n2, p, npr), n1, p)
    cdef uint32_t q1 = _addm(_montmul(n2, n1, p, npr), n0, p)
    cdef uint32_t q0 = _montmul(n2, n0, p, npr)
    cdef uint32_t g2 = 0, g1 = one_m, g0 = 0
    cdef uint32_t s4, s3, s2, s1, s0, t2, t1, t0
    cdef int bit
    for bit in range(hb - 2, -1, -1):
        s4 = _montmul(g2, g2, p, npr)
        s3 = _montmul(g2, g1, p, npr)
        s3 = _addm(s3, s3, p)
        s2 = _montmul(g2, g0, p, npr)
        s2 = _addm(_montmul(g1, g1, p, npr), _addm(s2, s2, p), p)
        s1 = _montmul(g1, g0, p, npr)
        s1 = _addm(s1, s1, p)
        s0 = _montmul(g0, g0, p, npr)
        g2 = _addm(s2, _addm(_montmul(s3, n2, p, npr), _montmul(s4, q2, p, npr), p), p)
        g1 = _addm(s1, _addm(_montmul(s3, n1, p, npr), _montmul(s4, q1, p, npr), p), p)
        g0 = _addm(s0, _addm(_montmul(s3, n0, p, npr), _montmul(s4, q0, p, npr), p), p)
        if (p >> bit) & 1:
            t2 = _addm(g1, _montmul(g2, n2, p, npr), p)
            t1 = _addm(g0, _montmul(g2, n1, p, npr), p)
            t0 = _montmul(g2, n0, p, npr)
            g2 = t2
            g1 = t1
            g0 = t0
    return g2 == 0 and g0 == 0 and g1 == one_m


def types_block(int64_t[::1] primes, int64_t[:, ::1] bcd, int8_t[::1] chi_flat,
                int64_t[::1] chi_off, int64_t[::1] chi_mod, int64_t[::1] skip_flat,
                int64_t[::1] skip_off):
    """Splitting-type codes 0..4 (or SKIP_SENTINEL) per field per odd prime."""
    cdef Py_ssize_t n_f = bcd.shape[0]
    cdef Py_ssize_t n_k = primes.shape[0]
    out_arr = np.empty((n_f, n_k), dtype=np.uint8)
    cdef uint8_t[:, ::1] out = out_arr
    pos_arr = np.asarray(skip_off[:n_f]).copy()
    cdef int64_t[::1] pos = pos_arr
    cdef Py_ssize_t k, f
    cdef int64_t p64
    cdef uint32_t p, x, npr, r1, r2, one_m
    cdef int hb, i
    cdef int8_t chi
    for k in range(n_k):
        p64 = primes[k]
        p = <uint32_t> p64
        # -p^{-1} mod 2^32 by Newton iteration
        x = p
        for i in range(4):
            x = x * (2 - p * x)
        npr = <uint32_t> (0 - x)
        r1 = <uint32_t> ((<uint64_t> 1 << 32) % p)
        r2 = <uint32_t> ((<uint64_t> r1 * r1) % p)
        one_m = r1
        hb = 0
        while (p64 >> hb) != 0:
            hb += 1
        for f in range(n_f):
            while pos[f] < skip_off[f + 1] and skip_flat[pos[f]] < p64:
                pos[f] += 1
            if pos[f] < skip_off[f + 1] and skip_flat[pos[f]] == p64:
                out[f, k] = SKIP_SENTINEL
                continue
            chi = chi_flat[chi_off[f] + p64 % chi_mod[f]]
            if chi < 0:
                out[f, k] = 1
            elif chi == 0:
                out[f, k] = SKIP_SENTINEL
            elif _splits_completely(bcd[f, 0], bcd[f, 1], bcd[f, 2],
                                    p, npr, r2, one_m, hb):
                out[f, k] = 0
            else:
                out[f, k] = 2
    return out_arr


def lambda_from_spf(uint32_t[::1] spf, uint8_t[::1] tag, double[:, ::1] hr):
    """Multiplicative coefficients from a smallest-prime-factor table."""
    cdef Py_ssize_t n_max = spf.shape[0] - 1
    lam_arr = np.ones(n_max + 1, dtype=np.float64)
    cdef double[::1] lam = lam_arr
    lam[0] = 0.0
    cdef Py_ssize_t n, m
    cdef uint32_t p
    cdef int r
    for n in range(2, n_max + 1):
        p = spf[n]
        m = n // p
        r = 1
        while spf[m] == p:
            m //= p
            r += 1
        lam[n] = lam[m] * hr[tag[p], r]
    return lam_arr


def telescope_sums(double[::1] lam, double[::1] base, int J):
    """S_j = sum_n lam[n] n^j base[n], Kahan-compensated, j = 0..J."""
    out_arr = np.zeros(J + 1, dtype=np.float64)
    comp_arr = np.zeros(J + 1, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] comp = comp_arr
    cdef Py_ssize_t n_max = lam.shape[0] - 1
    cdef Py_ssize_t n
    cdef int j
    cdef double x, y, t
    for n in range(n_max + 1):
        x = lam[n] * base[n]
        if x == 0.0:
            continue
        for j in range(J + 1):
            y = x - comp[j]
            t = out[j] + y
            comp[j] = (t - out[j]) - y
            out[j] = t
            x *= n
    return out_arr
