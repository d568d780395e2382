"""Pure numpy implementations of the hot kernels.

This backend is the reference semantics; the compiled backend in core.pyx
must produce the same outputs (bit-identical for the integer-hash Monte
Carlo, and to rounding for the floating-point accumulations).  It is
selected automatically when the compiled extension is unavailable, or when
CUBICARTIN_PURE is set.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_INV53 = 2.0**-53


def char_grid(theta: np.ndarray, weights: np.ndarray, n: int, dxi: float) -> np.ndarray:
    """prod_p sum_a weights[p,a] exp(i xi theta[p,a]) on the grid xi_j = j*dxi."""
    xi = np.arange(n, dtype=np.float64) * dxi
    out = np.ones(n, dtype=np.complex128)
    for i in range(theta.shape[0]):
        acc = np.exp(1j * xi[:, None] * theta[i][None, :]) @ weights[i].astype(np.complex128)
        out *= acc
    return out


def mc_block(seed: int, base: int, nsamples: int, cumw: np.ndarray,
             fvals: np.ndarray, shift: float) -> np.ndarray:
    """Random-model samples sum_p F(p; a_p) + shift, counter-mode splitmix64.

    cumw[i] holds the four cumulative weight thresholds at prime i (the fifth
    type is the remainder); fvals[i, t] the additive contribution of type t.
    Sample k draws splitting types via splitmix64(seed + (k*nP + i + 1)*GOLD).
    """
    np_seed = np.uint64(seed)
    n_p = cumw.shape[0]
    out = np.full(nsamples, shift, dtype=np.float64)
    ks = np.arange(base, base + nsamples, dtype=np.uint64) * np.uint64(n_p)
    with np.errstate(over="ignore"):
        for i in range(n_p):
            z = np_seed + (ks + np.uint64(i + 1)) * _GOLD
            z ^= z >> np.uint64(30)
            z *= _M1
            z ^= z >> np.uint64(27)
            z *= _M2
            z ^= z >> np.uint64(31)
            u = (z >> np.uint64(11)).astype(np.float64) * _INV53
            c = cumw[i]
            t = (
                (u >= c[0]).astype(np.int8) + (u >= c[1]) + (u >= c[2]) + (u >= c[3])
            ).astype(np.intp)
            out += fvals[i, t]
    return out


def _ladder_split_mask(p: int, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """For x^3+bx^2+cx+d squarefree mod p: True where p splits completely.

    Vectorized square-and-multiply computation of x^p mod (f, p); the prime
    splits completely iff x^p == x in the quotient ring.
    """
    n2 = (-b) % p
    n1 = (-c) % p
    n0 = (-d) % p
    q2 = (n2 * n2 % p + n1) % p
    q1 = (n2 * n1 % p + n0) % p
    q0 = n2 * n0 % p
    g2 = np.zeros_like(n2)
    g1 = np.ones_like(n2)
    g0 = np.zeros_like(n2)
    for bit in bin(p)[3:]:
        s4 = g2 * g2 % p
        s3 = 2 * (g2 * g1 % p) % p
        s2 = (g1 * g1 % p + 2 * (g2 * g0 % p)) % p
        s1 = 2 * (g1 * g0 % p) % p
        s0 = g0 * g0 % p
        g2 = (s2 + s3 * n2 + s4 * q2) % p
        g1 = (s1 + s3 * n1 + s4 * q1) % p
        g0 = (s0 + s3 * n0 + s4 * q0) % p
        if bit == "1":
            h2 = (g1 + g2 * n2) % p
            h1 = (g0 + g2 * n1) % p
            h0 = g2 * n0 % p
            g2, g1, g0 = h2, h1, h0
    return (g2 == 0) & (g1 == 1) & (g0 == 0)


SKIP_SENTINEL = 5


def types_block(primes: np.ndarray, bcd: np.ndarray, chi_flat: np.ndarray,
                chi_off: np.ndarray, chi_mod: np.ndarray, skip_flat: np.ndarray,
                skip_off: np.ndarray) -> np.ndarray:
    """Splitting-type codes (order 111,21,3,121,13 -> 0..4) per field per prime.

    Primes must be odd and ascending.  chi_flat/chi_off/chi_mod hold each
    field's quadratic character table (period chi_mod[f]); skip_flat/skip_off
    each field's sorted list of primes dividing its polynomial discriminant,
    for which SKIP_SENTINEL is emitted (the caller resolves those exactly).
    """
    n_f = bcd.shape[0]
    n_k = len(primes)
    out = np.empty((n_f, n_k), dtype=np.uint8)
    skip_mask = np.zeros((n_f, n_k), dtype=bool)
    for f in range(n_f):
        sk = skip_flat[skip_off[f]:skip_off[f + 1]]
        pos = np.searchsorted(primes, sk)
        hit = pos < n_k
        pos = pos[hit]
        ok = primes[pos] == sk[hit]
        skip_mask[f, pos[ok]] = True
    b_all = bcd[:, 0]
    c_all = bcd[:, 1]
    d_all = bcd[:, 2]
    for k in range(n_k):
        p = int(primes[k])
        chi = chi_flat[chi_off[:-1] + p % chi_mod]
        col = np.where(chi < 0, 1, 2).astype(np.uint8)
        col[chi == 0] = SKIP_SENTINEL
        idx = np.nonzero((chi > 0) & ~skip_mask[:, k])[0]
        if idx.size:
            split = _ladder_split_mask(p, b_all[idx] % p, c_all[idx] % p, d_all[idx] % p)
            col[idx[split]] = 0
        col[skip_mask[:, k]] = SKIP_SENTINEL
        out[:, k] = col
    return out


def lambda_from_spf(spf: np.ndarray, tag: np.ndarray, hr: np.ndarray) -> np.ndarray:
    """Multiplicative coefficients lam[n] = prod hr[tag[p], v_p(n)] for n <= N.

    spf is a smallest-prime-factor table (spf[0] = spf[1] = 0); tag[p] gives
    the splitting-type code at each prime p; hr[t, r] the local coefficient.
    """
    n_max = len(spf) - 1
    lam = np.ones(n_max + 1, dtype=np.float64)
    lam[0] = 0.0
    primes = np.nonzero(spf == np.arange(n_max + 1, dtype=spf.dtype))[0]
    primes = primes[primes >= 2]
    for p in primes.tolist():
        row = hr[tag[p]]
        pr = p
        r = 1
        while pr <= n_max:
            nxt = pr * p
            sl = np.arange(pr, n_max + 1, pr)
            if nxt <= n_max:
                sl = sl[sl % nxt != 0]
            lam[sl] *= row[r]
            pr = nxt
            r += 1
    return lam


def telescope_sums(lam: np.ndarray, base: np.ndarray, J: int) -> np.ndarray:
    """S_j = sum_n lam[n] n^j base[n] for j = 0..J."""
    n = np.arange(len(lam), dtype=np.float64)
    out = np.empty(J + 1, dtype=np.float64)
    acc = lam * base
    out[0] = float(np.sum(acc))
    for j in range(1, J + 1):
        acc = acc * n
        out[j] = float(np.sum(acc))
    return out
