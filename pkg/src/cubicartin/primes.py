"""Prime utilities: sieves, primality, factorization, Jacobi symbol, prime-zeta tails.

Everything downstream (Euler products, field enumeration, L-value sums) funnels
its prime generation through here so that sieve work is cached and block sizes
are consistent.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator

import mpmath as mp
import numpy as np

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller–Rabin for 64-bit-ish integers."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # This witness set is deterministic for n < 3.3e24.
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=8)
def sieve(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array (Eratosthenes, odd-only)."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    n = int(limit)
    mask = np.ones(n + 1, dtype=bool)
    mask[:2] = False
    mask[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if mask[p]:
            mask[p * p :: 2 * p] = False
    return np.nonzero(mask)[0].astype(np.int64)


def spf_sieve(limit: int) -> np.ndarray:
    """Smallest-prime-factor table spf[0..limit] as uint32 (spf[0] = spf[1] = 0)."""
    n = int(limit)
    spf = np.zeros(n + 1, dtype=np.uint32)
    for p in range(2, math.isqrt(n) + 1):
        if spf[p] == 0:
            sl = spf[p * p :: p]
            sl[sl == 0] = p
            spf[p] = p
    rest = spf[2:] == 0
    spf[2:][rest] = (np.nonzero(rest)[0] + 2).astype(np.uint32)
    return spf


def prime_blocks(lo: int, hi: int, block: int = 1 << 23) -> Iterator[np.ndarray]:
    """Yield int64 arrays of the primes in (lo, hi], segment by segment."""
    lo = max(int(lo), 1)
    hi = int(hi)
    if hi <= lo:
        return
    base = sieve(math.isqrt(hi) + 1)
    start = lo + 1
    while start <= hi:
        stop = min(start + block - 1, hi)
        mask = np.ones(stop - start + 1, dtype=bool)
        if start <= 1:
            mask[: 2 - start] = False
        for p in base:
            p = int(p)
            if p * p > stop:
                break
            first = max(p * p, ((start + p - 1) // p) * p)
            mask[first - start :: p] = False
        seg = np.nonzero(mask)[0] + start
        if seg.size:
            yield seg.astype(np.int64)
        start = stop + 1


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization [(p, e), ...] by trial division (fine for n <= ~1e12)."""
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    out: list[tuple[int, int]] = []
    m = n
    for p in (2, 3, 5):
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    # wheel over 30
    q = 7
    inc = (4, 2, 4, 2, 4, 6, 2, 6)
    i = 0
    while q * q <= m:
        if m % q == 0:
            e = 0
            while m % q == 0:
                m //= q
                e += 1
            out.append((q, e))
        q += inc[i]
        i = (i + 1) % 8
    if m > 1:
        out.append((m, 1))
    return out


def mobius(n: int) -> int:
    mu = 1
    for _, e in factorize(n):
        if e > 1:
            return 0
        mu = -mu
    return mu


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n), the full extension of Jacobi to all integers."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    t = 0
    while n % 2 == 0:
        n //= 2
        t += 1
    if t:
        if a % 2 == 0:
            return 0
        if t % 2 == 1 and a % 8 in (3, 5):
            result = -result
    return result * jacobi(a % n, n)


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n > 0."""
    if n <= 0 or n % 2 == 0:
        raise ValueError("jacobi requires positive odd n")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


# ---------------------------------------------------------------------------
# prime-zeta sums and tails


def prime_zeta(x, derivative: int = 0):
    """P(x) = sum over primes of p^{-x}, or its x-derivative of given order.

    Uses the Moebius expansion P(x) = sum_k mu(k)/k * log zeta(kx); derivatives
    differentiate term by term, so only zeta and its first two derivatives are
    needed.  Requires x > 1.  Returns an mpmath mpf/mpc.
    """
    x = mp.mpf(x) if not isinstance(x, (mp.mpf, mp.mpc)) else x
    if mp.re(x) <= 1:
        raise ValueError("prime_zeta requires Re(x) > 1")
    if derivative == 0:
        return mp.primezeta(x)
    total = mp.mpf(0)
    k = 1
    while k * mp.re(x) < mp.mp.prec * mp.log(2) + 30:
        mu = mobius(k)
        if mu:
            s = k * x
            z0 = mp.zeta(s)
            z1 = mp.zeta(s, derivative=1)
            if derivative == 1:
                total += mu * z1 / z0
            elif derivative == 2:
                z2 = mp.zeta(s, derivative=2)
                total += mu * k * (z2 / z0 - (z1 / z0) ** 2)
            else:
                raise ValueError("derivative must be 0, 1 or 2")
        k += 1
    return total


def prime_power_partial(x, P: int, log_weight: int = 0):
    """sum_{p <= P} p^{-x} (log p)^a, accumulated with fsum (x may be complex)."""
    ps = sieve(P).astype(np.float64)
    logs = np.log(ps)
    terms = np.exp(-x * logs)
    if log_weight:
        terms = terms * logs**log_weight
    if np.iscomplexobj(terms):
        return complex(
            math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist())
        )
    return float(math.fsum(terms.tolist()))


@lru_cache(maxsize=4096)
def _prime_tail_cached(x, P: int, log_weight: int):
    full = prime_zeta(x, derivative=log_weight)
    if log_weight % 2 == 1:
        full = -full
    full = complex(full) if isinstance(full, mp.mpc) else float(full)
    return full - prime_power_partial(x, P, log_weight)


def prime_tail(x, P: int, log_weight: int = 0):
    """sum_{p > P} p^{-x} (log p)^a for a in {0, 1, 2}; needs Re(x) > 1."""
    if isinstance(x, complex):
        if x.imag == 0:
            x = x.real
        return _prime_tail_cached(x, int(P), log_weight)
    return _prime_tail_cached(float(x), int(P), log_weight)
